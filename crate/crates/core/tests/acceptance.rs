//! Acceptance run: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use su2topo::chern_density::{boundary_cs_flux, chern_density_spinor, spinor_chern_kernel, unit_chern_kernel};
use su2topo::chern_simons::{abelian_trace_gap, knot_charge, CsMethod};
use su2topo::conventions::Orientation;
use su2topo::decomposition::{covariant_derivative, decompose, parallel_gauge_potential};
use su2topo::fields::{gauge_transform, normalize, phi_to_spinor, DEFAULT_EPS_ZERO};
use su2topo::generators::{
    identity_map_s3, linear_phi_field, quaternion_polynomial_field, quaternion_power_field, random_gauge, random_spinor, random_su2,
    AnalyticPhi, Domain, IDENTITY4,
};
use su2topo::io::{decode, encode, read_field, write_field, Field};
use su2topo::lattice::integrate;
use su2topo::phi_mapping::{charge_ledger, local_degree, LedgerOptions};
use su2topo::pipeline::{verify, Generator, RunConfig, DEFAULT_ROOTS};
use su2topo::su2::Spinor;
use su2topo::{Grid, ScalarField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let grid = Grid::open_box(4, 12, 0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let psi = random_spinor(grid.clone(), seed);
        let gauge = random_gauge(grid.clone(), 1000 + seed);
        let d = decompose(&psi, &gauge, Some(f64::INFINITY)).unwrap();
        worst = worst.max(d.reconstruction_residual);
    }
    let t = start.elapsed().as_secs_f64();
    outcome(worst < 1e-12 && t < 10.0, format!("max |a + b - A| = {worst:.2e} (< 1e-12), {t:.2} s (< 10 s)"))
}

fn criterion_2() -> Outcome {
    let grid = Grid::open_box(4, 8, -0.5, 0.5).unwrap();
    let (mut ra, mut rb) = (0.0f64, 0.0f64);
    for seed in 0..10 {
        let psi = random_spinor(grid.clone(), 2000 + seed);
        let gauge = random_gauge(grid.clone(), 3000 + seed);
        let s = random_su2(grid.clone(), 4000 + seed);
        let before = decompose(&psi, &gauge, None).unwrap();
        let t = gauge_transform(&psi, &gauge, &s).unwrap();
        assert!(t.exact);
        let after = decompose(&t.psi, &t.gauge, None).unwrap();
        let ds = s.gradient().unwrap();
        for site in 0..grid.len() {
            let sm = s.matrix(site);
            let sd = sm.adjoint();
            for mu in 0..4 {
                let a_exp = sm * before.a.matrix(site, mu) * sd + ds.matrix(mu, site) * sd;
                let b_exp = sm * before.b.matrix(site, mu) * sd;
                ra = ra.max((after.a.matrix(site, mu) - a_exp).max_abs());
                rb = rb.max((after.b.matrix(site, mu) - b_exp).max_abs());
            }
        }
    }
    outcome(ra < 1e-10 && rb < 1e-10, format!("gauge law on a {ra:.2e}, covariance of b {rb:.2e} (each < 1e-10)"))
}

fn criterion_3() -> Outcome {
    let mut spinors = vec![identity_map_s3(16).unwrap()];
    let grid = Grid::open_box(4, 8, -1.0, 1.0).unwrap();
    for seed in 0..10 {
        spinors.push(normalize(&random_spinor(grid.clone(), 5000 + seed), DEFAULT_EPS_ZERO).unwrap());
    }
    let (mut dpsi, mut bnorm) = (0.0f64, 0.0f64);
    for psi in &spinors {
        let a = parallel_gauge_potential(psi).unwrap();
        dpsi = dpsi.max(covariant_derivative(psi, &a).unwrap().max_norm());
        bnorm = bnorm.max(decompose(psi, &a, None).unwrap().b.max_abs());
    }
    outcome(dpsi < 1e-12 && bnorm < 1e-12, format!("max |D psi| = {dpsi:.2e}, max |b| = {bnorm:.2e} (each < 1e-12), 11 spinors"))
}

fn identity_q(res: usize) -> f64 {
    knot_charge(&identity_map_s3(res).unwrap(), CsMethod::Spinor, Orientation::default()).unwrap().q
}

fn criterion_4() -> Outcome {
    let e24 = (identity_q(24) - 1.0).abs();
    let e48 = (identity_q(48) - 1.0).abs();
    let start = Instant::now();
    let e96 = (identity_q(96) - 1.0).abs();
    let t = start.elapsed().as_secs_f64();
    let (r1, r2) = (e24 / e48, e48 / e96);
    let ok = e48 < 1e-2 && (3.0..=5.0).contains(&r1) && (3.0..=5.0).contains(&r2) && t < 60.0;
    outcome(ok, format!("|Q - 1| at 48^3 = {e48:.2e} (< 1e-2), ratios {r1:.3}, {r2:.3} (in [3, 5]), 96^3 in {t:.2} s (< 60 s)"))
}

fn criterion_5() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [-2, -1, 1, 2, 3] {
        let phi = quaternion_power_field(n, &Domain::S3Chart(64)).unwrap();
        let psi = normalize(&phi_to_spinor(&phi), DEFAULT_EPS_ZERO).unwrap();
        let q = knot_charge(&psi, CsMethod::Spinor, Orientation::default()).unwrap().q;
        let qfn = knot_charge(&psi, CsMethod::Abelian, Orientation::default()).unwrap().q;
        ok &= (q - n as f64).abs() < 0.02 && (qfn - q).abs() < 0.02;
        parts.push(format!("n={n}: Q={q:.4}, |Q_FN-Q|={:.1e}", (qfn - q).abs()));
    }
    outcome(ok, format!("{} (tol 0.02)", parts.join("; ")))
}

fn criterion_6() -> Outcome {
    let mut fitted = Vec::new();
    for res in [16, 32, 64] {
        let gap = abelian_trace_gap(&identity_map_s3(res).unwrap()).unwrap();
        let h = PI / res as f64;
        fitted.push(gap.max_abs() / (h * h));
    }
    let hi = fitted.iter().cloned().fold(f64::MIN, f64::max);
    let lo = fitted.iter().cloned().fold(f64::MAX, f64::min);
    let drift = hi / lo;
    outcome(drift < 2.0 && lo > 0.0, format!("fitted C at 16, 32, 64 = {:.4}, {:.4}, {:.4}, drift {drift:.3} (< 2)", fitted[0], fitted[1], fitted[2]))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let mut dphi = [[0.0; 4]; 4];
        for row in dphi.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let d: [Spinor; 4] = std::array::from_fn(|mu| Spinor::from_reals(&dphi[mu]));
        let rs = spinor_chern_kernel(&d);
        let ru = unit_chern_kernel(&dphi);
        let scale = 2.0 / (PI * PI) * dphi.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).product::<f64>();
        worst = worst.max(((rs.re - ru).abs() + rs.im.abs()) / scale);
    }
    let t = start.elapsed().as_secs_f64();
    outcome(worst < 1e-12 && t < 5.0, format!("max relative |rho_spinor - rho_unit| = {worst:.2e} (< 1e-12), {t:.2} s (< 5 s)"))
}

fn criterion_8() -> Outcome {
    let gap = |n: usize, seed: u64| {
        let grid = Grid::open_box(4, n, 0.0, 1.0).unwrap();
        let psi = random_spinor(grid, seed);
        let bulk = integrate(&chern_density_spinor(&psi).unwrap().density).unwrap();
        (bulk, (bulk - boundary_cs_flux(&psi).unwrap()).abs())
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in [80, 81, 82] {
        let ((bulk, e1), (_, e2)) = (gap(9, seed), gap(17, seed));
        let r = e1 / e2;
        ok &= (3.0..=5.0).contains(&r) && bulk.abs() > 1e-8 && e2 > 1e-10;
        parts.push(format!("seed {seed}: integral {bulk:.3e}, gap {e1:.2e} -> {e2:.2e}, ratio {r:.3}"));
    }
    outcome(ok, format!("{} (ratio in [3, 5])", parts.join("; ")))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let opts = LedgerOptions::default();
    let shift = [0.031, -0.017, 0.043, 0.009];
    let grid = Grid::open_box(4, 17, -1.0, 1.0).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;

    let (phi, map) = linear_phi_field(IDENTITY4, shift, &grid).unwrap();
    let l = charge_ledger(&phi, &map, &opts).unwrap();
    let a = l.zeros.len() == 1 && l.zeros[0].beta == 1 && l.zeros[0].eta == 1 && (l.c2.value - 1.0).abs() < 0.02;
    parts.push(format!("(a) {} zero(s), C2={:.4}", l.zeros.len(), l.c2.value));

    let mut flip = IDENTITY4;
    flip[0][0] = -1.0;
    let (phi, map) = linear_phi_field(flip, shift, &grid).unwrap();
    let l = charge_ledger(&phi, &map, &opts).unwrap();
    let b = l.zeros.len() == 1 && l.zeros[0].eta == -1 && (l.c2.value + 1.0).abs() < 0.02;
    parts.push(format!("(b) eta={:?}, C2={:.4}", l.zeros.iter().map(|z| z.eta).collect::<Vec<_>>(), l.c2.value));

    let grid24 = Grid::open_box(4, 24, -1.0, 1.0).unwrap();
    let (phi, map) = quaternion_polynomial_field(&DEFAULT_ROOTS, &grid24).unwrap();
    let l = charge_ledger(&phi, &map, &opts).unwrap();
    let miss = DEFAULT_ROOTS
        .iter()
        .map(|r| {
            l.zeros
                .iter()
                .map(|z| (0..4).map(|i| (z.position[i] - r[i]).powi(2)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let c = l.zeros.len() == 2 && miss < 1e-8 && l.sum_beta_eta == 2 && (l.c2.value - 2.0).abs() < 0.05;
    parts.push(format!("(c) {} zeros, root miss {miss:.1e}, sum {}, C2={:.4}", l.zeros.len(), l.sum_beta_eta, l.c2.value));

    let d_est = local_degree(&AnalyticPhi::Power { n: 2 }, &[0.0; 4], 0.5, opts.sphere_resolution, opts.max_refinements).unwrap();
    let d = d_est.degree == 2 && d_est.deviation < 0.05;
    parts.push(format!("(d) degree {:.4}", d_est.value));

    let t = start.elapsed().as_secs_f64();
    ok &= a && b && c && d && t < 300.0;
    parts.push(format!("{t:.1} s (< 300 s)"));
    outcome(ok, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let box17 = Grid::open_box(4, 17, -1.0, 1.0).unwrap();
    let runs = [
        Generator::Linear { grid: box17.clone(), flipped: false },
        Generator::Linear { grid: box17.clone(), flipped: true },
        Generator::BoxPower { n: 2, grid: box17.clone() },
        Generator::BoxPower { n: 3, grid: box17 },
        Generator::Polynomial { grid: Grid::open_box(4, 24, -1.0, 1.0).unwrap(), roots: DEFAULT_ROOTS.to_vec() },
    ];
    let mut ok = true;
    let mut seen = Vec::new();
    for g in &runs {
        let r = verify(g, &RunConfig::default()).unwrap();
        let get = |q: &str| r.results.iter().find(|c| c.quantity == q).map(|c| c.value as i64);
        match (get("chi"), get("ledger_sum")) {
            (Some(chi), Some(sum)) => {
                ok &= chi == sum;
                seen.push(format!("{chi}={sum}"));
            }
            _ => ok = false,
        }
    }
    outcome(ok, format!("chi = ledger sum on {} verify runs: {}", runs.len(), seen.join(", ")))
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let g4 = Grid::open_box(4, 5, -1.0, 1.0).unwrap();
    let g3 = Grid::open_box(3, 6, 0.0, 2.0).unwrap();
    let scalar = ScalarField::new(g3.clone(), (0..g3.len()).map(|i| (i as f64).sin()).collect()).unwrap();
    let fields = [
        Field::Spinor(random_spinor(g4.clone(), 11)),
        Field::Phi(quaternion_power_field(2, &Domain::S3Chart(8)).unwrap()),
        Field::Gauge(random_gauge(g4.clone(), 12)),
        Field::Su2(random_su2(g4.clone(), 13).without_second_derivatives()),
        Field::Scalar(scalar),
    ];
    let mut round_trips = 0;
    for (i, f) in fields.iter().enumerate() {
        let path = dir.path().join(format!("f{i}.fld"));
        write_field(&path, f).unwrap();
        let back = read_field(&path).unwrap();
        if &back == f && std::fs::read(&path).unwrap() == encode(&back) {
            round_trips += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut detected = 0;
    for trial in 0..100 {
        let mut bytes = encode(&fields[trial % fields.len()]);
        let pos = rng.gen_range(0..bytes.len());
        bytes[pos] ^= rng.gen_range(1..=255u8);
        if decode(&bytes).is_err() {
            detected += 1;
        }
    }
    outcome(round_trips == 5 && detected == 100, format!("{round_trips}/5 kinds bit-equal, {detected}/100 corruptions detected"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("decomposition identity", criterion_1),
        ("transformation laws", criterion_2),
        ("parallel condition", criterion_3),
        ("spinor Chern-Simons form", criterion_4),
        ("knot charge quantization", criterion_5),
        ("abelian and trace integrands", criterion_6),
        ("Chern density identity", criterion_7),
        ("volume vs boundary flux", criterion_8),
        ("zero ledger", criterion_9),
        ("Euler alias", criterion_10),
        ("FLD1 round trip", criterion_11),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        all &= o.pass;
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
