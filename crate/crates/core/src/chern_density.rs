//! Chern density on a 4-grid and the second Chern number.
//!
//! * spinor: `rho = -(1/4 pi^2) eps (d psi^dag d psi)(d psi^dag d psi)`,
//! * unit: `rho = (1/12 pi^2) eps^{mu nu la rho} eps_{abcd} d n^a d n^b d n^c d n^d`,
//! * trace: `rho = (1/8 pi^2) (1/4) eps Tr(F F) = -(1/64 pi^2) eps F^a F^a`.
//!
//! The spinor and unit kernels agree as algebraic identities on any jet. For a
//! unit-norm map both vanish identically, so the integer part of the charge
//! lives at the zeros; see `phi_mapping` for the excision route.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::chern_simons::spinor_cs_kernel;
use crate::conventions::perms4;
use crate::decomposition::DerivativeRegime;
use crate::error::{Error, Result};
use crate::fields::{unit_vector_excluding, GaugeField, PhiField, SpinorField, DEFAULT_EPS_ZERO};
use crate::lattice::{integrate_masked, Accumulator, Boundary, Grid, Mask, SampledField, ScalarField};
use crate::su2::{epsilon3, Matrix2C, Spinor, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChernMethod {
    Spinor,
    Unit,
    Trace,
}

#[derive(Debug, Clone)]
pub struct ChernDensity {
    pub density: ScalarField,
    pub method: ChernMethod,
    pub regime: DerivativeRegime,
    pub imaginary_residue: f64,
}

/// Spinor kernel at one site. Valid for unnormalized spinors.
pub fn spinor_chern_kernel(d: &[Spinor; 4]) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for (p, s) in perms4() {
        sum += d[p[0]].dot(&d[p[1]]) * d[p[2]].dot(&d[p[3]]) * *s;
    }
    sum * (-1.0 / (4.0 * PI * PI))
}

/// Unit-vector kernel from `dn[mu][a] = d_mu n^a`, summed term by term.
pub fn unit_chern_kernel(dn: &[[f64; 4]; 4]) -> f64 {
    let mut acc = Accumulator::default();
    for (p, s) in perms4() {
        for (q, t) in perms4() {
            acc.add(s * t * dn[p[0]][q[0]] * dn[p[1]][q[1]] * dn[p[2]][q[2]] * dn[p[3]][q[3]]);
        }
    }
    acc.total() / (12.0 * PI * PI)
}

/// Trace kernel from field strength components `f[pair][a]` indexed by
/// [`PAIRS`].
pub fn trace_chern_kernel(f: &[[f64; 3]; 6]) -> f64 {
    let get = |mu: usize, nu: usize| -> [f64; 3] {
        let (k, sign) = pair_slot(mu, nu);
        f[k].map(|v| v * sign)
    };
    let mut sum = 0.0;
    for (p, s) in perms4() {
        let (a, b) = (get(p[0], p[1]), get(p[2], p[3]));
        sum += s * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
    }
    -sum / (64.0 * PI * PI)
}

/// The six index pairs `mu < nu` of a 4-grid.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn pair_slot(mu: usize, nu: usize) -> (usize, f64) {
    let (lo, hi, sign) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
    let k = PAIRS.iter().position(|&p| p == (lo, hi)).expect("distinct indices");
    (k, sign)
}

/// `F^a_{mu nu} = d_mu A^a_nu - d_nu A^a_mu - eps_abc A^b_mu A^c_nu` on a 4-grid.
#[derive(Debug, Clone)]
pub struct FieldStrength {
    grid: Grid,
    values: Vec<[[f64; 3]; 6]>,
    /// Largest gap between the component form and the matrix form
    /// `dA - dA - [A, A]`.
    pub form_residual: f64,
    pub regime: DerivativeRegime,
}

impl FieldStrength {
    pub fn new(gauge: &GaugeField) -> Result<Self> {
        let grid = gauge.grid().clone();
        grid.require_rank(4)?;
        let ga = gauge.gradient()?;
        let per_site: Vec<([[f64; 3]; 6], f64)> = (0..grid.len())
            .into_par_iter()
            .map(|site| {
                let mut out = [[0.0; 3]; 6];
                let mut gap: f64 = 0.0;
                for (k, &(mu, nu)) in PAIRS.iter().enumerate() {
                    let (am, an) = (gauge.component(site, mu), gauge.component(site, nu));
                    let (dmu_an, dnu_am) = (ga.component(mu, site, nu), ga.component(nu, site, mu));
                    for a in 0..3 {
                        let mut cross = 0.0;
                        for b in 0..3 {
                            for c in 0..3 {
                                cross += epsilon3(a, b, c) * am[b] * an[c];
                            }
                        }
                        out[k][a] = dmu_an[a] - dnu_am[a] - cross;
                    }
                    let m = ga.matrix(mu, site, nu) - ga.matrix(nu, site, mu) - gauge.matrix(site, mu).commutator(&gauge.matrix(site, nu));
                    gap = gap.max((m - Matrix2C::from_algebra(&out[k])).max_abs());
                }
                (out, gap)
            })
            .collect();
        let form_residual = per_site.iter().fold(0.0f64, |m, (_, g)| m.max(*g));
        Ok(FieldStrength {
            grid,
            values: per_site.into_iter().map(|(v, _)| v).collect(),
            form_residual,
            regime: DerivativeRegime::from_exact(ga.is_exact()),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `F^a_{mu nu}`, antisymmetric in `(mu, nu)`.
    pub fn component(&self, site: usize, mu: usize, nu: usize) -> [f64; 3] {
        if mu == nu {
            return [0.0; 3];
        }
        let (k, sign) = pair_slot(mu, nu);
        self.values[site][k].map(|v| v * sign)
    }

    pub fn pairs_at(&self, site: usize) -> &[[f64; 3]; 6] {
        &self.values[site]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn chern_density_spinor(psi: &SpinorField) -> Result<ChernDensity> {
    psi.grid().require_rank(4)?;
    let d = psi.gradient()?;
    let vals: Vec<C64> = (0..psi.grid().len())
        .into_par_iter()
        .map(|site| spinor_chern_kernel(&[d.at(0, site), d.at(1, site), d.at(2, site), d.at(3, site)]))
        .collect();
    let imaginary_residue = vals.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    Ok(ChernDensity {
        density: ScalarField::new(psi.grid().clone(), vals.iter().map(|z| z.re).collect())?,
        method: ChernMethod::Spinor,
        regime: DerivativeRegime::from_exact(d.is_exact()),
        imaginary_residue,
    })
}

/// Density of `n = phi / |phi|`. Sites in `mask` are set to zero; unmasked
/// zeros of `phi` are an error.
pub fn chern_density_unit(phi: &PhiField, mask: Option<&Mask>) -> Result<ChernDensity> {
    phi.grid().require_rank(4)?;
    let n = unit_vector_excluding(phi, DEFAULT_EPS_ZERO, mask)?;
    let dn = n.gradient()?;
    let field = SampledField::from_site_fn(phi.grid().clone(), 1, |site, out| {
        if mask.is_some_and(|m| m.is_excluded(site)) {
            out[0] = 0.0;
            return;
        }
        let mut j = [[0.0; 4]; 4];
        for (mu, row) in j.iter_mut().enumerate() {
            row.copy_from_slice(dn.at(mu, site));
        }
        out[0] = unit_chern_kernel(&j);
    });
    Ok(ChernDensity {
        density: ScalarField::from_sampled(field)?,
        method: ChernMethod::Unit,
        regime: DerivativeRegime::from_exact(dn.is_exact()),
        imaginary_residue: 0.0,
    })
}

pub fn chern_density_trace(gauge: &GaugeField) -> Result<ChernDensity> {
    let f = FieldStrength::new(gauge)?;
    let field = SampledField::from_site_fn(gauge.grid().clone(), 1, |site, out| out[0] = trace_chern_kernel(f.pairs_at(site)));
    Ok(ChernDensity { density: ScalarField::from_sampled(field)?, method: ChernMethod::Trace, regime: f.regime, imaginary_residue: 0.0 })
}

/// Largest excluded fraction of the volume for which a second Chern number is
/// still flagged reliable.
pub const RELIABLE_EXCLUDED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct SecondChern {
    pub value: f64,
    pub nearest: i64,
    pub deviation: f64,
    pub excluded_volume: f64,
    pub excluded_fraction: f64,
    pub reliable: bool,
}

pub fn second_chern_number(density: &ScalarField, mask: Option<&Mask>) -> Result<SecondChern> {
    density.grid().require_rank(4)?;
    let value = integrate_masked(density, mask)?;
    let excluded_volume = mask.map_or(0.0, |m| m.excluded_volume(density.grid()));
    let excluded_fraction = excluded_volume / density.grid().volume();
    let nearest = value.round();
    Ok(SecondChern {
        value,
        nearest: nearest as i64,
        deviation: (value - nearest).abs(),
        excluded_volume,
        excluded_fraction,
        reliable: excluded_fraction <= RELIABLE_EXCLUDED_FRACTION,
    })
}

/// Chern-Simons flux of a spinor through the boundary of an open 4-box:
/// `sum_mu (-1)^mu [int_{x_mu = hi} w - int_{x_mu = lo} w]` with `w` the
/// spinor Chern-Simons kernel over the remaining axes in ascending order.
/// Equals the box integral of the spinor Chern density.
pub fn boundary_cs_flux(psi: &SpinorField) -> Result<f64> {
    let grid = psi.grid();
    grid.require_rank(4)?;
    if grid.axes().iter().any(|a| a.boundary == Boundary::Periodic) || grid.is_cell_centered() {
        return Err(Error::InvalidGrid("boundary flux needs node-centered open axes".into()));
    }
    let d = psi.gradient()?;
    let mut total = Accumulator::default();
    for mu in 0..4 {
        let rest: Vec<usize> = (0..4).filter(|&k| k != mu).collect();
        let n_mu = grid.axis(mu).n;
        for (end, sign) in [(n_mu - 1, 1.0), (0, -1.0)] {
            let mut face = Accumulator::default();
            for site in 0..grid.len() {
                let k = grid.multi_index(site);
                if k[mu] != end {
                    continue;
                }
                let w: f64 = rest.iter().map(|&ax| grid.weight(ax, k[ax])).product();
                let ds = [d.at(rest[0], site), d.at(rest[1], site), d.at(rest[2], site)];
                face.add(w * spinor_cs_kernel(&psi.psi(site), &ds).re);
            }
            let parity = if mu % 2 == 0 { 1.0 } else { -1.0 };
            total.add(parity * sign * face.total());
        }
    }
    Ok(grid.orientation() * total.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conventions::det4;
    use crate::fields::{gauge_transform, phi_to_spinor};
    use crate::generators::{linear_phi_field, random_gauge, random_spinor, random_su2, IDENTITY4};
    use crate::lattice::{integrate, Axis};

    #[test]
    fn kernels_on_identity_jet() {
        let d = IDENTITY4.map(|row| Spinor::from_reals(&row));
        let rho = spinor_chern_kernel(&d);
        assert!((rho.re - 2.0 / (PI * PI)).abs() < 1e-15 && rho.im.abs() < 1e-15);
        assert!((unit_chern_kernel(&IDENTITY4) - 2.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn unit_kernel_is_scaled_determinant() {
        let m = [[0.3, -1.2, 0.5, 2.0], [1.0, 0.1, -0.4, 0.2], [0.0, 2.2, 1.1, -0.7], [0.6, 0.3, 0.9, 1.4]];
        assert!((unit_chern_kernel(&m) - 2.0 / (PI * PI) * det4(&m)).abs() < 1e-14);
    }

    #[test]
    fn unit_density_vanishes_off_zeros() {
        let grid = Grid::open_box(4, 9, 0.5, 1.5).unwrap();
        let (phi, _) = linear_phi_field(IDENTITY4, [0.0; 4], &grid).unwrap();
        let rho = chern_density_unit(&phi, None).unwrap();
        assert!(rho.density.max_abs() < 1e-13, "{}", rho.density.max_abs());
        let unit = crate::fields::normalize(&phi_to_spinor(&phi), DEFAULT_EPS_ZERO).unwrap();
        assert!(chern_density_spinor(&unit).unwrap().density.max_abs() < 1e-13);
    }

    #[test]
    fn trace_density_of_pure_gauge_vanishes() {
        let grid = Grid::new(vec![Axis::periodic(6, 0.0, 0.5); 4]).unwrap();
        let psi = random_spinor(grid.clone(), 1);
        let t = gauge_transform(&psi, &GaugeField::zero(grid.clone()), &random_su2(grid, 2)).unwrap();
        let f = FieldStrength::new(&t.gauge).unwrap();
        assert!(f.max_abs() < 1e-12, "{}", f.max_abs());
    }

    #[test]
    fn field_strength_forms_agree() {
        let grid = Grid::new(vec![Axis::periodic(5, 0.0, 0.5); 4]).unwrap();
        let f = FieldStrength::new(&random_gauge(grid, 4)).unwrap();
        assert!(f.form_residual < 1e-13);
        for mu in 0..4 {
            for nu in 0..4 {
                let a = f.component(3, mu, nu);
                let b = f.component(3, nu, mu);
                assert!(a.iter().zip(b).all(|(x, y)| x == &-y));
            }
        }
    }

    #[test]
    fn trace_density_gauge_invariant() {
        let grid = Grid::new(vec![Axis::periodic(5, 0.0, 0.6); 4]).unwrap();
        let a = random_gauge(grid.clone(), 7);
        let t = gauge_transform(&random_spinor(grid.clone(), 8), &a, &random_su2(grid, 9)).unwrap();
        let r1 = chern_density_trace(&a).unwrap();
        let r2 = chern_density_trace(&t.gauge).unwrap();
        let gap = r1.density.values().iter().zip(r2.density.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(gap < 1e-12, "{gap}");
    }

    #[test]
    fn stokes_on_random_spinor() {
        let gap = |n: usize| {
            let grid = Grid::open_box(4, n, 0.0, 1.0).unwrap();
            let psi = random_spinor(grid, 21);
            let bulk = integrate(&chern_density_spinor(&psi).unwrap().density).unwrap();
            assert!(bulk.abs() > 1e-5, "{bulk}");
            (bulk - boundary_cs_flux(&psi).unwrap()).abs()
        };
        let (e1, e2) = (gap(9), gap(17));
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "{e1} {e2}");
    }

    #[test]
    fn second_chern_reliability() {
        let grid = Grid::open_box(4, 11, -1.0, 1.0).unwrap();
        let rho = ScalarField::new(grid.clone(), vec![1.0 / 16.0; grid.len()]).unwrap();
        let c = second_chern_number(&rho, None).unwrap();
        assert!((c.value - 1.0).abs() < 1e-14 && c.nearest == 1 && c.reliable);
        let big = Mask::balls(&grid, &[[0.0; 4]], 0.9);
        let c = second_chern_number(&rho, Some(&big)).unwrap();
        assert!(!c.reliable && c.excluded_fraction > 0.05);
    }
}
