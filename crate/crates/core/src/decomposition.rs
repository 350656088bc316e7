//! Splitting a gauge potential into a spinor-built part and a covariant part.
//!
//! With `N = psi^dagger psi`, `P(X) = X - Tr(X)/2` and `D = d - A`:
//!
//! ```text
//! a_mu =  P[(d_mu psi psi^dagger - psi d_mu psi^dagger) / N]
//! b_mu = -P[(D_mu psi psi^dagger - psi D_mu psi^dagger) / N]
//! ```
//!
//! `a + b = A` holds identically, `a` transforms like a connection and `b`
//! homogeneously.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{GaugeField, SpinorField, DEFAULT_EPS_ZERO};
use crate::lattice::{Grid, SampledField};
use crate::su2::{pauli, Matrix2C, Spinor, I};

/// Whether derivatives came from exact jets or central differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeRegime {
    Jet,
    FiniteDifference,
}

impl DerivativeRegime {
    pub fn from_exact(exact: bool) -> Self {
        if exact {
            DerivativeRegime::Jet
        } else {
            DerivativeRegime::FiniteDifference
        }
    }
}

/// `D_mu psi = d_mu psi - A_mu psi` on every axis.
#[derive(Debug, Clone)]
pub struct CovariantDerivative {
    grid: Grid,
    values: Vec<Spinor>,
    pub regime: DerivativeRegime,
}

impl CovariantDerivative {
    #[inline]
    pub fn at(&self, axis: usize, site: usize) -> Spinor {
        self.values[axis * self.grid.len() + site]
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Largest Euclidean norm over sites and axes.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, s| m.max(s.norm_sqr().sqrt()))
    }
}

fn check_grids(psi: &SpinorField, gauge: &GaugeField) -> Result<()> {
    if !psi.grid().same_as(gauge.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

pub fn covariant_derivative(psi: &SpinorField, gauge: &GaugeField) -> Result<CovariantDerivative> {
    check_grids(psi, gauge)?;
    let grid = psi.grid().clone();
    let dpsi = psi.gradient()?;
    let len = grid.len();
    let values = (0..grid.rank() * len)
        .into_par_iter()
        .map(|i| {
            let (mu, site) = (i / len, i % len);
            dpsi.at(mu, site) - gauge.matrix(site, mu).apply(&psi.psi(site))
        })
        .collect();
    Ok(CovariantDerivative { grid, values, regime: DerivativeRegime::from_exact(dpsi.is_exact()) })
}

/// `X = (u psi^dagger - psi u^dagger) / N`, before the traceless projection.
fn raw_bilinear(u: &Spinor, psi: &Spinor, n: f64) -> Matrix2C {
    (u.outer(psi) - psi.outer(u)).scale_re(1.0 / n)
}

fn traceless(x: &Matrix2C) -> Matrix2C {
    *x - Matrix2C::identity().scale(x.trace() * 0.5)
}

/// `i (psi^dagger sigma_a u - u^dagger sigma_a psi) / N`, the component form of
/// `P[raw_bilinear(u, psi)]`.
fn component_bilinear(u: &Spinor, psi: &Spinor, n: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (a, o) in out.iter_mut().enumerate() {
        let s = pauli(a);
        let z = I * (psi.dot(&s.apply(u)) - u.dot(&s.apply(psi)));
        *o = z.re / n;
    }
    out
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub a: GaugeField,
    pub b: GaugeField,
    /// `max |a + b - A|` over sites, directions and components.
    pub reconstruction_residual: f64,
    /// Largest anti-Hermitian defect of the unprojected bilinears.
    pub anti_hermiticity_residual: f64,
    /// Largest gap between the matrix and component forms of `a` and `b`.
    pub component_residual: f64,
    /// Largest imaginary residue met while extracting components.
    pub imaginary_residue: f64,
    pub regime: DerivativeRegime,
}

/// Default reconstruction tolerance, scaled by the potential magnitude.
pub fn default_tolerance(gauge: &GaugeField) -> f64 {
    1e-10 * gauge.max_abs().max(1.0)
}

/// Decomposes `A` relative to `psi`. Fails when `psi` vanishes somewhere or
/// when `a + b` misses `A` by more than `tol` (default
/// [`default_tolerance`]).
pub fn decompose(psi: &SpinorField, gauge: &GaugeField, tol: Option<f64>) -> Result<Decomposition> {
    check_grids(psi, gauge)?;
    let grid = psi.grid().clone();
    let rank = grid.rank();
    let len = grid.len();
    for site in 0..len {
        let n = psi.psi(site).norm_sqr();
        if n.sqrt() < DEFAULT_EPS_ZERO {
            return Err(Error::Normalization { site, norm: n.sqrt() });
        }
    }
    let dpsi = psi.gradient()?;
    let nc = 3 * rank;

    struct SiteOut {
        a: Vec<f64>,
        b: Vec<f64>,
        recon: f64,
        anti: f64,
        comp: f64,
        imag: f64,
    }

    let per_site: Vec<SiteOut> = (0..len)
        .into_par_iter()
        .map(|site| {
            let p = psi.psi(site);
            let n = p.norm_sqr();
            let mut out = SiteOut { a: vec![0.0; nc], b: vec![0.0; nc], recon: 0.0, anti: 0.0, comp: 0.0, imag: 0.0 };
            for mu in 0..rank {
                let amat = gauge.matrix(site, mu);
                let d = dpsi.at(mu, site);
                let cov = d - amat.apply(&p);
                let xa = raw_bilinear(&d, &p, n);
                let xb = raw_bilinear(&cov, &p, n);
                out.anti = out.anti.max((xa + xa.adjoint()).max_abs()).max((xb + xb.adjoint()).max_abs());
                let (ca, ia) = traceless(&xa).algebra_components();
                let (cb, ib) = (-traceless(&xb)).algebra_components();
                out.imag = out.imag.max(ia).max(ib);
                let ka = component_bilinear(&d, &p, n);
                let kb = component_bilinear(&cov, &p, n);
                let ref_a = gauge.component(site, mu);
                for c in 0..3 {
                    out.a[mu * 3 + c] = ca[c];
                    out.b[mu * 3 + c] = cb[c];
                    out.recon = out.recon.max((ca[c] + cb[c] - ref_a[c]).abs());
                    out.comp = out.comp.max((ca[c] - ka[c]).abs()).max((cb[c] + kb[c]).abs());
                }
            }
            out
        })
        .collect();

    let mut a_vals = Vec::with_capacity(len * nc);
    let mut b_vals = Vec::with_capacity(len * nc);
    let (mut recon, mut anti, mut comp, mut imag) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in per_site {
        a_vals.extend_from_slice(&s.a);
        b_vals.extend_from_slice(&s.b);
        recon = recon.max(s.recon);
        anti = anti.max(s.anti);
        comp = comp.max(s.comp);
        imag = imag.max(s.imag);
    }
    let tolerance = tol.unwrap_or_else(|| default_tolerance(gauge));
    if !(recon <= tolerance) {
        return Err(Error::Reconstruction { residual: recon, tolerance });
    }
    Ok(Decomposition {
        a: GaugeField::new(SampledField::new(grid.clone(), nc, a_vals)?)?,
        b: GaugeField::new(SampledField::new(grid, nc, b_vals)?)?,
        reconstruction_residual: recon,
        anti_hermiticity_residual: anti,
        component_residual: comp,
        imaginary_residue: imag,
        regime: DerivativeRegime::from_exact(dpsi.is_exact()),
    })
}

/// The potential that makes a normalized spinor covariantly constant:
/// `A^a_mu = i (psi^dagger sigma_a d_mu psi - d_mu psi^dagger sigma_a psi)`.
pub fn parallel_gauge_potential(psi: &SpinorField) -> Result<GaugeField> {
    psi.check_normalized()?;
    let grid = psi.grid().clone();
    let rank = grid.rank();
    let dpsi = psi.gradient()?;
    let field = SampledField::from_site_fn(grid, 3 * rank, |site, out| {
        let p = psi.psi(site);
        for mu in 0..rank {
            out[mu * 3..mu * 3 + 3].copy_from_slice(&component_bilinear(&dpsi.at(mu, site), &p, 1.0));
        }
    });
    GaugeField::new(field)
}
