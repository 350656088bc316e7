//! Analysis stages shared by the command-line front end and the tests.

use std::time::Instant;

use crate::chern_density::{boundary_cs_flux, chern_density_spinor, chern_density_trace, second_chern_number};
use crate::chern_simons::{abelian_data, knot_charge, CsMethod};
use crate::conventions::Orientation;
use crate::decomposition::{decompose, default_tolerance, DerivativeRegime};
use crate::error::{Error, Result};
use crate::fields::{gauge_transform, normalize, phi_to_spinor, GaugeField, PhiField, SpinorField, Su2Field, DEFAULT_EPS_ZERO};
use crate::generators::{
    identity_map_s3, linear_phi_field, quaternion_polynomial_field, quaternion_power_field, random_gauge, random_spinor, random_su2,
    AnalyticPhi, Domain, IDENTITY4,
};
use crate::lattice::Grid;
use crate::phi_mapping::{charge_ledger, InterpolatedPhi, LedgerOptions, PhiSampler};
use crate::report::{ChargeReport, ChargeResult, ConfigEcho};

/// Which routes to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSelection {
    Trace,
    Spinor,
    Unit,
    All,
}

impl MethodSelection {
    fn wants(self, m: MethodSelection) -> bool {
        self == MethodSelection::All || self == m
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Tolerance for route-to-route agreement and integer rounding.
    pub tolerance: f64,
    pub methods: MethodSelection,
    pub seed: u64,
    pub timings: bool,
    pub ledger: LedgerOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { tolerance: 0.02, methods: MethodSelection::All, seed: 0, timings: false, ledger: LedgerOptions::default() }
    }
}

/// Residual tolerances for identities that hold exactly on jets.
pub const JET_IDENTITY_TOL: f64 = 1e-10;

struct Stopwatch {
    enabled: bool,
    start: Instant,
}

impl Stopwatch {
    fn new(enabled: bool) -> Self {
        Stopwatch { enabled, start: Instant::now() }
    }

    fn lap(&mut self, report: &mut ChargeReport, stage: &str) {
        if self.enabled {
            report.add_timing(stage, self.start.elapsed().as_secs_f64());
        }
        self.start = Instant::now();
    }
}

/// Starts a report with the orientation calibration filled in.
pub fn new_report(command: &str, generator: Option<String>, input: Option<String>, grid: Option<&Grid>, cfg: &RunConfig) -> Result<(ChargeReport, Orientation)> {
    let psi = identity_map_s3(16)?;
    let raw = knot_charge(&psi, CsMethod::Spinor, Orientation::default())?.q;
    let orientation = Orientation::calibrated(raw);
    let config = ConfigEcho {
        command: command.into(),
        generator,
        input,
        grid: grid.map(Into::into),
        tolerance: cfg.tolerance,
        seed: Some(cfg.seed),
        orientation_sign: orientation.sign,
        orientation_calibration: raw,
    };
    Ok((ChargeReport::new(config), orientation))
}

/// Knot charge by the selected routes, with consistency lines against the
/// spinor route.
pub fn knot_stage(report: &mut ChargeReport, psi: &SpinorField, orientation: Orientation, cfg: &RunConfig) -> Result<()> {
    let grid = psi.grid();
    let mut watch = Stopwatch::new(cfg.timings);
    let spinor = knot_charge(psi, CsMethod::Spinor, orientation)?;
    report.results.push(ChargeResult::new("Q", "spinor", spinor.q, Some(spinor.regime), grid));
    report.check_below("Q spinor rounding", spinor.deviation, cfg.tolerance);
    if spinor.regime == DerivativeRegime::Jet {
        report.check_below("Q spinor imaginary residue", spinor.imaginary_residue, JET_IDENTITY_TOL);
    }
    watch.lap(report, "knot charge (spinor)");
    if cfg.methods.wants(MethodSelection::Trace) {
        let trace = knot_charge(psi, CsMethod::Trace, orientation)?;
        report.results.push(ChargeResult::new("Q", "trace", trace.q, Some(trace.regime), grid));
        report.compare("Q trace vs spinor", trace.q, spinor.q, cfg.tolerance);
        watch.lap(report, "knot charge (trace)");
    }
    if cfg.methods == MethodSelection::All || cfg.methods == MethodSelection::Spinor {
        match abelian_data(psi) {
            Ok(data) => {
                report.check_below("abelian exactness", data.exactness_residual, data.exactness_bound);
                let fnq = knot_charge(psi, CsMethod::Abelian, orientation)?;
                report.results.push(ChargeResult::new("Q_FN", "abelian", fnq.q, Some(fnq.regime), grid));
                report.compare("Q_FN vs Q spinor", fnq.q, spinor.q, cfg.tolerance);
            }
            Err(Error::Exactness { residual, bound }) => {
                report.check_below("abelian exactness", residual, bound);
            }
            Err(e) => return Err(e),
        }
        watch.lap(report, "knot charge (abelian)");
    }
    Ok(())
}

/// Zero ledger and density-route second Chern number for a map.
pub fn ledger_stage(report: &mut ChargeReport, phi: &PhiField, sampler: &dyn PhiSampler, cfg: &RunConfig) -> Result<()> {
    let mut watch = Stopwatch::new(cfg.timings);
    let ledger = charge_ledger(phi, sampler, &cfg.ledger)?;
    let grid = phi.grid();
    report.results.push(ChargeResult::new("C2", "unit+excision", ledger.c2.value, None, grid));
    report.results.push(ChargeResult::new("ledger_sum", "zeros", ledger.sum_beta_eta as f64, None, grid));
    report.results.push(ChargeResult::new("chi", "zeros", ledger.chi as f64, None, grid));
    report.compare("C2 vs ledger sum", ledger.c2.value, ledger.sum_beta_eta as f64, crate::phi_mapping::LEDGER_TOLERANCE);
    report.check_equal("chi equals ledger sum", ledger.chi, ledger.sum_beta_eta);
    if let Some(b) = ledger.boundary_flux {
        report.results.push(ChargeResult::new("C2", "boundary flux", b, None, grid));
        report.compare("boundary flux vs ledger sum", b, ledger.sum_beta_eta as f64, crate::phi_mapping::LEDGER_TOLERANCE);
    }
    report.warnings.extend(ledger.warnings.iter().cloned());
    report.zeros = ledger.zeros;
    watch.lap(report, "zero ledger");
    Ok(())
}

/// Decomposition of `A` relative to `psi`; with `s`, the transformation laws.
pub fn decomposition_stage(report: &mut ChargeReport, psi: &SpinorField, gauge: &GaugeField, s: Option<&Su2Field>, cfg: &RunConfig) -> Result<()> {
    let mut watch = Stopwatch::new(cfg.timings);
    let tol = default_tolerance(gauge);
    let d = decompose(psi, gauge, Some(f64::INFINITY))?;
    report.check_below("reconstruction a + b = A", d.reconstruction_residual, tol);
    report.check_below("component forms agree", d.component_residual, tol);
    watch.lap(report, "decomposition");
    if let Some(s) = s {
        let t = gauge_transform(psi, gauge, s)?;
        let after = decompose(&t.psi, &t.gauge, Some(f64::INFINITY))?;
        let ds = s.gradient()?;
        let (mut ra, mut rb) = (0.0f64, 0.0f64);
        for site in 0..psi.grid().len() {
            let sm = s.matrix(site);
            for mu in 0..psi.grid().rank() {
                let a_exp = sm * d.a.matrix(site, mu) * sm.adjoint() + ds.matrix(mu, site) * sm.adjoint();
                let b_exp = sm * d.b.matrix(site, mu) * sm.adjoint();
                ra = ra.max((after.a.matrix(site, mu) - a_exp).max_abs());
                rb = rb.max((after.b.matrix(site, mu) - b_exp).max_abs());
            }
        }
        let law_tol = if t.exact { JET_IDENTITY_TOL } else { f64::INFINITY };
        report.check_below("a transforms as a connection", ra, law_tol);
        report.check_below("b transforms covariantly", rb, law_tol);
        watch.lap(report, "transformation laws");
    }
    Ok(())
}

/// Box integral of the spinor Chern density against its boundary flux.
pub fn stokes_stage(report: &mut ChargeReport, psi: &SpinorField, cfg: &RunConfig) -> Result<()> {
    let mut watch = Stopwatch::new(cfg.timings);
    let rho = chern_density_spinor(psi)?;
    let bulk = second_chern_number(&rho.density, None)?;
    let flux = boundary_cs_flux(psi)?;
    report.results.push(ChargeResult::new("C2", "spinor", bulk.value, Some(rho.regime), psi.grid()));
    report.results.push(ChargeResult::new("C2", "boundary flux", flux, Some(rho.regime), psi.grid()));
    report.compare("volume vs boundary flux", bulk.value, flux, cfg.tolerance);
    watch.lap(report, "stokes");
    Ok(())
}

/// Second Chern number of a gauge potential by the trace route.
pub fn trace_chern_stage(report: &mut ChargeReport, gauge: &GaugeField, cfg: &RunConfig) -> Result<()> {
    let mut watch = Stopwatch::new(cfg.timings);
    let rho = chern_density_trace(gauge)?;
    let c2 = second_chern_number(&rho.density, None)?;
    report.results.push(ChargeResult::new("C2", "trace", c2.value, Some(rho.regime), gauge.grid()));
    watch.lap(report, "chern (trace)");
    Ok(())
}

/// Named configurations for `verify`.
#[derive(Debug, Clone)]
pub enum Generator {
    /// Identity map of S^3 on the chart.
    Identity { resolution: usize },
    /// `q^n` on the S^3 chart.
    Power { n: i32, resolution: usize },
    /// `phi = M x` on a box, `M` the identity or a reflection.
    Linear { grid: Grid, flipped: bool },
    /// `(q - c_1)(q - c_2)...` on a box.
    Polynomial { grid: Grid, roots: Vec<[f64; 4]> },
    /// `q^n` on a box, degenerate at the origin for `|n| > 1`.
    BoxPower { n: i32, grid: Grid },
    /// Seeded random spinor, potential and gauge transformation on a box.
    Random { grid: Grid },
}

impl Generator {
    pub fn name(&self) -> String {
        match self {
            Generator::Identity { resolution } => format!("identity s3 {resolution}"),
            Generator::Power { n, resolution } => format!("power {n} s3 {resolution}"),
            Generator::Linear { flipped, .. } => if *flipped { "flipped box".into() } else { "linear box".into() },
            Generator::Polynomial { roots, .. } => format!("polynomial box {} roots", roots.len()),
            Generator::BoxPower { n, .. } => format!("power {n} box"),
            Generator::Random { .. } => "random box".into(),
        }
    }

    fn grid(&self) -> Result<Grid> {
        Ok(match self {
            Generator::Identity { resolution } | Generator::Power { resolution, .. } => crate::generators::s3_chart_grid(*resolution)?,
            Generator::Linear { grid, .. } | Generator::Polynomial { grid, .. } | Generator::BoxPower { grid, .. } | Generator::Random { grid } => {
                grid.clone()
            }
        })
    }
}

/// The planted roots used by the default two-root polynomial.
pub const DEFAULT_ROOTS: [[f64; 4]; 2] = [[0.35, 0.1, -0.2, 0.05], [-0.4, -0.25, 0.2, 0.1]];

/// Runs every applicable cross-check on a named configuration.
pub fn verify(generator: &Generator, cfg: &RunConfig) -> Result<ChargeReport> {
    let grid = generator.grid()?;
    let (mut report, orientation) = new_report("verify", Some(generator.name()), None, Some(&grid), cfg)?;
    let mut watch = Stopwatch::new(cfg.timings);
    match generator {
        Generator::Identity { resolution } => {
            let psi = identity_map_s3(*resolution)?;
            watch.lap(&mut report, "generate");
            knot_stage(&mut report, &psi, orientation, cfg)?;
        }
        Generator::Power { n, resolution } => {
            let phi = quaternion_power_field(*n, &Domain::S3Chart(*resolution))?;
            let psi = normalize(&phi_to_spinor(&phi), DEFAULT_EPS_ZERO)?;
            watch.lap(&mut report, "generate");
            knot_stage(&mut report, &psi, orientation, cfg)?;
            report.check_equal("Q matches power", report.results[0].nearest, *n as i64);
        }
        Generator::Linear { grid, flipped } => {
            let mut m = IDENTITY4;
            if *flipped {
                m[0][0] = -1.0;
            }
            let (phi, map) = linear_phi_field(m, [0.0; 4], grid)?;
            watch.lap(&mut report, "generate");
            ledger_stage(&mut report, &phi, &map, cfg)?;
        }
        Generator::Polynomial { grid, roots } => {
            let (phi, map) = quaternion_polynomial_field(roots, grid)?;
            watch.lap(&mut report, "generate");
            ledger_stage(&mut report, &phi, &map, cfg)?;
        }
        Generator::BoxPower { n, grid } => {
            let map = AnalyticPhi::Power { n: *n };
            let phi = map.sample(&Domain::Box(grid.clone()))?;
            watch.lap(&mut report, "generate");
            ledger_stage(&mut report, &phi, &map, cfg)?;
        }
        Generator::Random { grid } => {
            let psi = random_spinor(grid.clone(), cfg.seed);
            let gauge = random_gauge(grid.clone(), cfg.seed);
            let s = random_su2(grid.clone(), cfg.seed);
            watch.lap(&mut report, "generate");
            decomposition_stage(&mut report, &psi, &gauge, Some(&s), cfg)?;
            if grid.rank() == 4 {
                trace_chern_stage(&mut report, &gauge, cfg)?;
                if grid.axes().iter().all(|a| a.boundary == crate::lattice::Boundary::Open) && !grid.is_cell_centered() {
                    stokes_stage(&mut report, &psi, cfg)?;
                }
            }
        }
    }
    Ok(report)
}

/// Ledger of a sampled map, using multilinear interpolation between samples.
pub fn zeros_report(phi: &PhiField, input: &str, cfg: &RunConfig) -> Result<ChargeReport> {
    let (mut report, _) = new_report("zeros", None, Some(input.into()), Some(phi.grid()), cfg)?;
    let sampler = InterpolatedPhi::new(phi)?;
    ledger_stage(&mut report, phi, &sampler, cfg)?;
    Ok(report)
}

pub fn cs_report(psi: &SpinorField, input: &str, cfg: &RunConfig) -> Result<ChargeReport> {
    let (mut report, orientation) = new_report("cs", None, Some(input.into()), Some(psi.grid()), cfg)?;
    let psi = if psi.is_normalized() { psi.clone() } else { normalize(psi, DEFAULT_EPS_ZERO)? };
    knot_stage(&mut report, &psi, orientation, cfg)?;
    Ok(report)
}

pub fn decompose_report(psi: &SpinorField, gauge: &GaugeField, input: &str, cfg: &RunConfig) -> Result<ChargeReport> {
    let (mut report, _) = new_report("decompose", None, Some(input.into()), Some(psi.grid()), cfg)?;
    decomposition_stage(&mut report, psi, gauge, None, cfg)?;
    Ok(report)
}

/// Input to `chern`.
pub enum ChernInput<'a> {
    Spinor(&'a SpinorField),
    Gauge(&'a GaugeField),
    Phi(&'a PhiField),
}

pub fn chern_report(input: ChernInput<'_>, name: &str, cfg: &RunConfig) -> Result<ChargeReport> {
    let grid = match &input {
        ChernInput::Spinor(p) => p.grid().clone(),
        ChernInput::Gauge(g) => g.grid().clone(),
        ChernInput::Phi(p) => p.grid().clone(),
    };
    let (mut report, _) = new_report("chern", None, Some(name.into()), Some(&grid), cfg)?;
    match input {
        ChernInput::Spinor(psi) => {
            if grid.axes().iter().all(|a| a.boundary == crate::lattice::Boundary::Open) && !grid.is_cell_centered() {
                stokes_stage(&mut report, psi, cfg)?;
            } else {
                let rho = chern_density_spinor(psi)?;
                let c2 = second_chern_number(&rho.density, None)?;
                report.results.push(ChargeResult::new("C2", "spinor", c2.value, Some(rho.regime), &grid));
            }
        }
        ChernInput::Gauge(gauge) => trace_chern_stage(&mut report, gauge, cfg)?,
        ChernInput::Phi(phi) => {
            let sampler = InterpolatedPhi::new(phi)?;
            ledger_stage(&mut report, phi, &sampler, cfg)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_identity_passes() {
        let r = verify(&Generator::Identity { resolution: 48 }, &RunConfig::default()).unwrap();
        assert!(r.pass, "{:?}", r.summary_lines());
        assert_eq!(r.results.iter().filter(|c| c.quantity == "Q").count(), 2);
        assert!(r.timings.is_none());
    }

    #[test]
    fn verify_linear_reports_chi() {
        let grid = Grid::open_box(4, 11, -1.0, 1.0).unwrap();
        let r = verify(&Generator::Linear { grid, flipped: false }, &RunConfig::default()).unwrap();
        assert!(r.pass, "{:?}", r.summary_lines());
        let chi = r.results.iter().find(|c| c.quantity == "chi").unwrap();
        assert_eq!(chi.value, 1.0);
        assert_eq!(r.zeros.len(), 1);
    }

    #[test]
    fn verify_random_passes_and_is_deterministic() {
        let grid = Grid::open_box(4, 7, 0.0, 1.0).unwrap();
        let cfg = RunConfig { seed: 3, ..RunConfig::default() };
        let a = verify(&Generator::Random { grid: grid.clone() }, &cfg).unwrap();
        let b = verify(&Generator::Random { grid }, &cfg).unwrap();
        assert!(a.pass, "{:?}", a.summary_lines());
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn timings_only_when_asked() {
        let cfg = RunConfig { timings: true, ..RunConfig::default() };
        let r = verify(&Generator::Identity { resolution: 12 }, &cfg).unwrap();
        assert!(r.timings.is_some());
    }
}
