use std::f64::consts::PI;

use proptest::prelude::*;

use su2topo::chern_density::{spinor_chern_kernel, unit_chern_kernel};
use su2topo::conventions::det4;
use su2topo::decomposition::decompose;
use su2topo::fields::{normalize, phi_to_spinor, spinor_to_phi, DEFAULT_EPS_ZERO};
use su2topo::generators::{random_gauge, random_spinor, AnalyticPhi, Quaternion};
use su2topo::su2::{clifford_compose, clifford_decompose, Matrix2C, Spinor, C64};
use su2topo::Grid;

fn grid() -> Grid {
    Grid::open_box(4, 4, -1.0, 1.0).unwrap()
}

fn c64() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| C64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reconstruction_holds_for_any_seed(seed in any::<u64>()) {
        let psi = random_spinor(grid(), seed);
        let gauge = random_gauge(grid(), seed.wrapping_add(1));
        let d = decompose(&psi, &gauge, None).unwrap();
        prop_assert!(d.reconstruction_residual < 1e-12);
    }

    #[test]
    fn decomposition_ignores_complex_scale(seed in any::<u64>(), c in c64()) {
        prop_assume!(c.norm() > 0.1);
        let psi = random_spinor(grid(), seed);
        let gauge = random_gauge(grid(), seed ^ 7);
        let d1 = decompose(&psi, &gauge, None).unwrap();
        let d2 = decompose(&psi.scaled(c), &gauge, None).unwrap();
        for site in 0..grid().len() {
            for mu in 0..4 {
                prop_assert!((d1.a.matrix(site, mu) - d2.a.matrix(site, mu)).max_abs() < 1e-12);
                prop_assert!((d1.b.matrix(site, mu) - d2.b.matrix(site, mu)).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalized_spinor_has_unit_norm(seed in any::<u64>()) {
        let psi = normalize(&random_spinor(grid(), seed), DEFAULT_EPS_ZERO).unwrap();
        for site in 0..grid().len() {
            prop_assert!((psi.psi(site).norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_spinor_round_trip(seed in any::<u64>()) {
        let psi = random_spinor(grid(), seed);
        let back = phi_to_spinor(&spinor_to_phi(&psi));
        prop_assert_eq!(back.as_sampled(), psi.as_sampled());
    }

    #[test]
    fn chern_kernels_agree_with_determinant(m in proptest::array::uniform4(proptest::array::uniform4(-3.0..3.0f64))) {
        let d: [Spinor; 4] = std::array::from_fn(|mu| Spinor::from_reals(&m[mu]));
        let rs = spinor_chern_kernel(&d);
        let ru = unit_chern_kernel(&m);
        let det = 2.0 / (PI * PI) * det4(&m);
        let scale: f64 = m.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).product::<f64>().max(1.0);
        prop_assert!((rs.re - ru).abs() < 1e-12 * scale);
        prop_assert!((ru - det).abs() < 1e-12 * scale);
        prop_assert!(rs.im.abs() < 1e-12 * scale);
    }

    #[test]
    fn clifford_round_trip(a in c64(), b in c64(), c in c64(), d in c64()) {
        let x = Matrix2C::new(a, b, c, d);
        let (s, v) = clifford_decompose(&x, false).unwrap();
        prop_assert!((clifford_compose(s, &v) - x).max_abs() < 1e-14);
    }

    #[test]
    fn quaternion_norm_is_multiplicative(p in proptest::array::uniform4(-2.0..2.0f64), q in proptest::array::uniform4(-2.0..2.0f64)) {
        let (p, q) = (Quaternion(p), Quaternion(q));
        let lhs = (p * q).norm_sqr();
        prop_assert!((lhs - p.norm_sqr() * q.norm_sqr()).abs() < 1e-12 * (1.0 + lhs));
    }

    #[test]
    fn linear_map_jacobian_is_its_matrix(m in proptest::array::uniform4(proptest::array::uniform4(-2.0..2.0f64)), x in proptest::array::uniform4(-1.0..1.0f64)) {
        let map = AnalyticPhi::Linear { matrix: m, shift: [0.0; 4] };
        let j = map.jacobian_at(&x);
        prop_assert!((det4(&j) - det4(&m)).abs() < 1e-12 * (1.0 + det4(&m).abs()));
    }
}
