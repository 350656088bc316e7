//! Chern-Simons density and knot charge of a normalized spinor on a 3-grid.
//!
//! Three routes, equal in the continuum:
//!
//! * spinor: `w = -(1/4 pi^2) eps^{ijk} (psi^dag d_i psi)(d_j psi^dag d_k psi)`,
//! * trace: `w = -(1/16 pi^2) eps^{ijk} [A^a_i d_j A^a_k - 1/3 eps^{abc} A^a_i A^b_j A^c_k]`
//!   with `A` the parallel potential of `psi`,
//! * abelian: `w = (1/32 pi^2) eps^{ijk} C_i H_jk`, `C_i = -2 Im(psi^dag d_i psi)`,
//!   `H_jk = -m . (d_j m x d_k m)`, `m^a = psi^dag sigma_a psi`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::conventions::{Orientation, PERMS3};
use crate::decomposition::{parallel_gauge_potential, DerivativeRegime};
use crate::error::{Error, Result};
use crate::fields::{sigma_model_field, GaugeField, SpinorField};
use crate::lattice::{central_diff, integrate, SampledField, ScalarField};
use crate::su2::{Spinor, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CsMethod {
    Spinor,
    Trace,
    Abelian,
}

#[derive(Debug, Clone)]
pub struct CsDensity {
    pub density: ScalarField,
    pub method: CsMethod,
    pub regime: DerivativeRegime,
    /// Largest imaginary part discarded from the complex spinor expression.
    pub imaginary_residue: f64,
}

/// Spinor-form kernel at one site. Valid for unnormalized spinors too.
pub fn spinor_cs_kernel(psi: &Spinor, d: &[Spinor; 3]) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for (p, s) in PERMS3 {
        sum += psi.dot(&d[p[0]]) * d[p[1]].dot(&d[p[2]]) * s;
    }
    sum * (-1.0 / (4.0 * PI * PI))
}

/// Trace-form kernel from components `a[i][a]` and derivatives `da[j][i][a] = d_j A^a_i`.
pub fn trace_cs_kernel(a: &[[f64; 3]; 3], da: &[[[f64; 3]; 3]; 3]) -> f64 {
    let mut quad = 0.0;
    let mut cubic = 0.0;
    for (p, s) in PERMS3 {
        let (i, j, k) = (p[0], p[1], p[2]);
        for c in 0..3 {
            quad += s * a[i][c] * da[j][k][c];
        }
        for (q, t) in PERMS3 {
            cubic += s * t * a[i][q[0]] * a[j][q[1]] * a[k][q[2]];
        }
    }
    -(quad - cubic / 3.0) / (16.0 * PI * PI)
}

/// `eps^{ijk} Tr(A_i d_j A_k - 2/3 A_i A_j A_k)` in components.
pub fn trace_cs_form(a: &[[f64; 3]; 3], da: &[[[f64; 3]; 3]; 3]) -> f64 {
    trace_cs_kernel(a, da) * 8.0 * PI * PI
}

fn require_3d(psi: &SpinorField) -> Result<()> {
    psi.grid().require_rank(3)
}

/// Chern-Simons density of an arbitrary potential on a 3-grid (trace form).
pub fn cs_density_of_potential(gauge: &GaugeField) -> Result<(ScalarField, DerivativeRegime)> {
    gauge.grid().require_rank(3)?;
    let ga = gauge.gradient()?;
    let field = SampledField::from_site_fn(gauge.grid().clone(), 1, |site, out| {
        let (a, da) = potential_at(gauge, &ga, site);
        out[0] = trace_cs_kernel(&a, &da);
    });
    Ok((ScalarField::from_sampled(field)?, DerivativeRegime::from_exact(ga.is_exact())))
}

fn potential_at(gauge: &GaugeField, ga: &crate::fields::GaugeGradient, site: usize) -> ([[f64; 3]; 3], [[[f64; 3]; 3]; 3]) {
    let mut a = [[0.0; 3]; 3];
    let mut da = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        a[i] = gauge.component(site, i);
        for j in 0..3 {
            da[j][i] = ga.component(j, site, i);
        }
    }
    (a, da)
}

/// Pointwise Chern-Simons density by the chosen route.
pub fn cs_density(psi: &SpinorField, method: CsMethod) -> Result<CsDensity> {
    require_3d(psi)?;
    match method {
        CsMethod::Spinor => {
            let d = psi.gradient()?;
            let grid = psi.grid().clone();
            let vals: Vec<C64> = (0..grid.len())
                .map(|site| spinor_cs_kernel(&psi.psi(site), &[d.at(0, site), d.at(1, site), d.at(2, site)]))
                .collect();
            let imaginary_residue = vals.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
            Ok(CsDensity {
                density: ScalarField::new(grid, vals.iter().map(|z| z.re).collect())?,
                method,
                regime: DerivativeRegime::from_exact(d.is_exact()),
                imaginary_residue,
            })
        }
        CsMethod::Trace => {
            let a = parallel_gauge_potential(psi)?;
            let (density, _) = cs_density_of_potential(&a)?;
            // the potential itself carries no jet, so its derivative is always differenced
            Ok(CsDensity { density, method, regime: DerivativeRegime::FiniteDifference, imaginary_residue: 0.0 })
        }
        CsMethod::Abelian => {
            let data = abelian_data(psi)?;
            let grid = psi.grid().clone();
            let vals = (0..grid.len()).map(|site| data.integrand(site) / (32.0 * PI * PI)).collect();
            Ok(CsDensity {
                density: ScalarField::new(grid, vals)?,
                method,
                regime: data.regime,
                imaginary_residue: 0.0,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KnotCharge {
    pub q: f64,
    pub nearest: i64,
    pub deviation: f64,
    pub method: CsMethod,
    pub regime: DerivativeRegime,
    pub imaginary_residue: f64,
}

/// `Q = sign * integral of w` over the grid. Requires a normalized spinor.
pub fn knot_charge(psi: &SpinorField, method: CsMethod, orientation: Orientation) -> Result<KnotCharge> {
    psi.check_normalized()?;
    let d = cs_density(psi, method)?;
    let q = orientation.sign * integrate(&d.density)?;
    let nearest = q.round();
    Ok(KnotCharge {
        q,
        nearest: nearest as i64,
        deviation: (q - nearest).abs(),
        method,
        regime: d.regime,
        imaginary_residue: d.imaginary_residue,
    })
}

/// Sign that gives the identity map of S^3 charge +1 under the spinor route.
pub fn calibrate_orientation() -> Result<Orientation> {
    let psi = crate::generators::identity_map_s3(16)?;
    let raw = knot_charge(&psi, CsMethod::Spinor, Orientation::default())?;
    Ok(Orientation::calibrated(raw.q))
}

/// Abelian potential `C`, its field strength `H = dC` from the sigma-model
/// field, and how well the two agree under central differencing.
#[derive(Debug, Clone)]
pub struct AbelianData {
    /// `C_i`, three components per site.
    pub c: SampledField,
    /// `(H_12, H_20, H_01)` per site, i.e. `H_jk` with `(j, k)` cyclic after `i`.
    pub h: SampledField,
    /// `max |H_jk - (d_j C_k - d_k C_j)|` with differenced `C`.
    pub exactness_residual: f64,
    /// `K h^2 max(1, max |H|)` with `K = 100`.
    pub exactness_bound: f64,
    pub regime: DerivativeRegime,
}

pub const EXACTNESS_CONSTANT: f64 = 100.0;

impl AbelianData {
    /// `eps^{ijk} C_i H_jk = 2 (C_0 H_12 + C_1 H_20 + C_2 H_01)`.
    pub fn integrand(&self, site: usize) -> f64 {
        let c = self.c.site(site);
        let h = self.h.site(site);
        2.0 * (c[0] * h[0] + c[1] * h[1] + c[2] * h[2])
    }
}

/// Builds `C` and `H` and checks `H = dC`. Errors when the residual exceeds
/// the bound.
pub fn abelian_data(psi: &SpinorField) -> Result<AbelianData> {
    require_3d(psi)?;
    psi.check_normalized()?;
    let grid = psi.grid().clone();
    let d = psi.gradient()?;
    let m = sigma_model_field(psi)?;
    let dm = m.gradient()?;
    let c = SampledField::from_site_fn(grid.clone(), 3, |site, out| {
        let p = psi.psi(site);
        for i in 0..3 {
            out[i] = -2.0 * p.dot(&d.at(i, site)).im;
        }
    });
    let h = SampledField::from_site_fn(grid.clone(), 3, |site, out| {
        let mv = m.m(site);
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let (a, b) = (dm.at(j, site), dm.at(k, site));
            let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            out[i] = -(mv[0] * cross[0] + mv[1] * cross[1] + mv[2] * cross[2]);
        }
    });
    let dc: Vec<SampledField> = (0..3).map(|ax| central_diff(&c, ax)).collect::<Result<_>>()?;
    let mut residual: f64 = 0.0;
    let mut hmax: f64 = 0.0;
    for site in 0..grid.len() {
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let curl = dc[j].site(site)[k] - dc[k].site(site)[j];
            let hv = h.site(site)[i];
            residual = residual.max((hv - curl).abs());
            hmax = hmax.max(hv.abs());
        }
    }
    let hs = grid.max_spacing();
    let bound = EXACTNESS_CONSTANT * hs * hs * hmax.max(1.0);
    if !(residual <= bound) {
        return Err(Error::Exactness { residual, bound });
    }
    Ok(AbelianData {
        c,
        h,
        exactness_residual: residual,
        exactness_bound: bound,
        regime: DerivativeRegime::from_exact(d.is_exact()),
    })
}

/// Pointwise gap `|1/4 eps C H - eps Tr(A dA - 2/3 A^3)|` with `A` the parallel
/// potential (differenced) and `C`, `H` from the spinor derivatives.
pub fn abelian_trace_gap(psi: &SpinorField) -> Result<ScalarField> {
    let data = abelian_data(psi)?;
    let a = parallel_gauge_potential(psi)?;
    let ga = a.gradient()?;
    let field = SampledField::from_site_fn(psi.grid().clone(), 1, |site, out| {
        let (av, da) = potential_at(&a, &ga, site);
        out[0] = (0.25 * data.integrand(site) - trace_cs_form(&av, &da)).abs();
    });
    ScalarField::from_sampled(field)
}
