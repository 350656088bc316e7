//! Machine-readable run reports.

use serde::Serialize;

use crate::decomposition::DerivativeRegime;
use crate::lattice::{Boundary, Grid};
use crate::phi_mapping::ZeroPoint;

pub const TOOL: &str = "su2topo";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisEcho {
    pub n: usize,
    pub origin: f64,
    pub spacing: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEcho {
    pub axes: Vec<AxisEcho>,
    pub cell_centered: bool,
    pub orientation: f64,
}

impl From<&Grid> for GridEcho {
    fn from(g: &Grid) -> Self {
        GridEcho {
            axes: g
                .axes()
                .iter()
                .map(|a| AxisEcho { n: a.n, origin: a.origin, spacing: a.spacing, boundary: a.boundary })
                .collect(),
            cell_centered: g.is_cell_centered(),
            orientation: g.orientation(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub command: String,
    pub generator: Option<String>,
    pub input: Option<String>,
    pub grid: Option<GridEcho>,
    pub tolerance: f64,
    pub seed: Option<u64>,
    pub orientation_sign: f64,
    /// Raw identity-map charge the orientation sign was fixed from.
    pub orientation_calibration: f64,
}

/// One computed charge, tagged with its route and grid.
#[derive(Debug, Clone, Serialize)]
pub struct ChargeResult {
    pub quantity: String,
    pub method: String,
    pub value: f64,
    pub nearest: i64,
    pub deviation: f64,
    pub regime: Option<DerivativeRegime>,
    pub grid: GridEcho,
}

impl ChargeResult {
    pub fn new(quantity: &str, method: &str, value: f64, regime: Option<DerivativeRegime>, grid: &Grid) -> Self {
        let nearest = value.round();
        ChargeResult {
            quantity: quantity.into(),
            method: method.into(),
            value,
            nearest: nearest as i64,
            deviation: (value - nearest).abs(),
            regime,
            grid: grid.into(),
        }
    }
}

/// Two routes to the same quantity.
#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub name: String,
    pub first: f64,
    pub second: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChargeReport {
    pub tool: String,
    pub version: String,
    pub config: ConfigEcho,
    pub results: Vec<ChargeResult>,
    pub zeros: Vec<ZeroPoint>,
    pub discrepancies: Vec<Discrepancy>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
    pub pass: bool,
}

impl ChargeReport {
    pub fn new(config: ConfigEcho) -> Self {
        ChargeReport {
            tool: TOOL.into(),
            version: VERSION.into(),
            config,
            results: Vec::new(),
            zeros: Vec::new(),
            discrepancies: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            timings: None,
            pass: true,
        }
    }

    /// Records `value < tolerance` as a check.
    pub fn check_below(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        let pass = value < tolerance;
        self.checks.push(Check { name: name.into(), value, tolerance, pass });
        self.pass &= pass;
        pass
    }

    /// Records an exact equality as a check with zero tolerance.
    pub fn check_equal(&mut self, name: &str, first: i64, second: i64) -> bool {
        let pass = first == second;
        self.checks.push(Check { name: name.into(), value: (first - second).abs() as f64, tolerance: 0.0, pass });
        self.pass &= pass;
        pass
    }

    /// Records a discrepancy between two routes and the matching check.
    pub fn compare(&mut self, name: &str, first: f64, second: f64, tolerance: f64) -> bool {
        let difference = (first - second).abs();
        self.discrepancies.push(Discrepancy { name: name.into(), first, second, difference });
        self.check_below(name, difference, tolerance)
    }

    pub fn add_timing(&mut self, stage: &str, seconds: f64) {
        self.timings.get_or_insert_with(Vec::new).push(Timing { stage: stage.into(), seconds });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One line per check, for terminals.
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {:.3e} (tol {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ConfigEcho {
        ConfigEcho {
            command: "test".into(),
            generator: None,
            input: None,
            grid: None,
            tolerance: 0.02,
            seed: Some(1),
            orientation_sign: 1.0,
            orientation_calibration: 1.0,
        }
    }

    #[test]
    fn checks_drive_pass_flag() {
        let mut r = ChargeReport::new(config());
        assert!(r.check_below("a", 0.01, 0.02));
        assert!(r.pass);
        assert!(!r.compare("b", 1.0, 1.5, 0.1));
        assert!(!r.pass);
        assert_eq!(r.discrepancies.len(), 1);
        assert!(r.summary_lines()[1].starts_with("FAIL b"));
    }

    #[test]
    fn json_is_stable_and_omits_absent_timings() {
        let mut r = ChargeReport::new(config());
        r.check_equal("chi", 2, 2);
        let a = r.to_json();
        assert_eq!(a, r.clone().to_json());
        assert!(!a.contains("timings"));
        r.add_timing("x", 0.5);
        assert!(r.to_json().contains("timings"));
    }
}
