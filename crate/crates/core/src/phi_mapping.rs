//! Zeros of a four-component map and the ledger `C2 = sum_j beta_j eta_j`.
//!
//! Each isolated zero `z_j` of `phi` carries a Brouwer sign `eta_j = sign det(d phi)`
//! and a Hopf index `beta_j`. For a regular zero `beta = 1`. At a degenerate
//! zero the surface degree `d` of `phi / |phi|` on a small 3-sphere around it
//! gives `beta = |d|`, `eta = sign d`.
//!
//! The density route excises a ball around every zero: the Chern density of
//! `n = phi / |phi|` is integrated over the rest of the grid and the
//! Chern-Simons flux of `n` through each excision sphere is added back.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::chern_density::{chern_density_unit, second_chern_number, SecondChern};
use crate::chern_simons::{knot_charge, CsMethod};
use crate::conventions::{det4, Orientation};
use crate::error::{Error, Result};
use crate::fields::{normalize, phi_to_spinor, unit_vector, unit_vector_excluding, PhiField, DEFAULT_EPS_ZERO};
use crate::generators::{s3_chart_grid_with, s3_chart_point};
use crate::lattice::{Boundary, Grid, Mask, SampledField};

/// Point evaluation of a four-component map.
pub trait PhiSampler: Sync {
    fn eval(&self, x: &[f64; 4]) -> Option<[f64; 4]>;

    /// `J[a][mu] = d phi^a / d x^mu`, if known in closed form.
    fn jacobian(&self, _x: &[f64; 4]) -> Option<[[f64; 4]; 4]> {
        None
    }
}

/// Multilinear interpolation of a sampled field.
pub struct InterpolatedPhi<'a> {
    field: &'a PhiField,
}

impl<'a> InterpolatedPhi<'a> {
    pub fn new(field: &'a PhiField) -> Result<Self> {
        field.grid().require_rank(4)?;
        Ok(InterpolatedPhi { field })
    }
}

impl PhiSampler for InterpolatedPhi<'_> {
    fn eval(&self, x: &[f64; 4]) -> Option<[f64; 4]> {
        let mut out = [0.0; 4];
        self.field.as_sampled().interpolate(x, &mut out).ok()?;
        Some(out)
    }
}

fn norm4(v: &[f64; 4]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Jacobian of a sampler: closed form when available, else central
/// differences with a step relative to `|x|`.
pub fn sampler_jacobian(sampler: &dyn PhiSampler, x: &[f64; 4]) -> Option<[[f64; 4]; 4]> {
    if let Some(j) = sampler.jacobian(x) {
        return Some(j);
    }
    let step = 1e-6 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let mut j = [[0.0; 4]; 4];
    for mu in 0..4 {
        let (mut xp, mut xm) = (*x, *x);
        xp[mu] += step;
        xm[mu] -= step;
        let (fp, fm) = (sampler.eval(&xp)?, sampler.eval(&xm)?);
        for a in 0..4 {
            j[a][mu] = (fp[a] - fm[a]) / (2.0 * step);
        }
    }
    Some(j)
}

/// Solves `J dx = r` by Gaussian elimination with partial pivoting.
fn solve4(j: &[[f64; 4]; 4], r: &[f64; 4]) -> Option<[f64; 4]> {
    let mut m = [[0.0; 5]; 4];
    for a in 0..4 {
        m[a][..4].copy_from_slice(&j[a]);
        m[a][4] = r[a];
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        if m[piv][col] == 0.0 || !m[piv][col].is_finite() {
            return None;
        }
        m.swap(col, piv);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..5 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][4] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Per-site `det(d phi)` of a sampled field.
pub fn jacobian_field(phi: &PhiField) -> Result<crate::lattice::ScalarField> {
    phi.grid().require_rank(4)?;
    let g = phi.gradient()?;
    let field = SampledField::from_site_fn(phi.grid().clone(), 1, |site, out| {
        let mut j = [[0.0; 4]; 4];
        for mu in 0..4 {
            for (a, v) in g.at(mu, site).iter().enumerate() {
                j[a][mu] = *v;
            }
        }
        out[0] = det4(&j);
    });
    crate::lattice::ScalarField::from_sampled(field)
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroSearchOptions {
    /// Newton stops once `|phi| <` this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ZeroSearchOptions {
    fn default() -> Self {
        ZeroSearchOptions { tolerance: 1e-10, max_iterations: 100 }
    }
}

/// A screened cell where Newton did not reach a zero.
#[derive(Debug, Clone, Serialize)]
pub struct SuspiciousCell {
    pub center: [f64; 4],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroSearch {
    pub zeros: Vec<[f64; 4]>,
    pub suspicious: Vec<SuspiciousCell>,
    pub screened_cells: usize,
}

enum NewtonOutcome {
    Converged([f64; 4]),
    Failed(f64),
}

fn newton(sampler: &dyn PhiSampler, start: [f64; 4], opts: &ZeroSearchOptions) -> NewtonOutcome {
    let mut x = start;
    let Some(mut f) = sampler.eval(&x) else {
        return NewtonOutcome::Failed(f64::INFINITY);
    };
    let mut r = norm4(&f);
    for _ in 0..opts.max_iterations {
        if r < opts.tolerance {
            return NewtonOutcome::Converged(x);
        }
        let Some(j) = sampler_jacobian(sampler, &x) else {
            return NewtonOutcome::Failed(r);
        };
        let Some(dx) = solve4(&j, &f) else {
            return NewtonOutcome::Failed(r);
        };
        let mut t = 1.0;
        loop {
            let trial = [x[0] - t * dx[0], x[1] - t * dx[1], x[2] - t * dx[2], x[3] - t * dx[3]];
            if let Some(ft) = sampler.eval(&trial) {
                let rt = norm4(&ft);
                if rt < r {
                    x = trial;
                    f = ft;
                    r = rt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-10 {
                return NewtonOutcome::Failed(r);
            }
        }
    }
    if r < opts.tolerance {
        NewtonOutcome::Converged(x)
    } else {
        NewtonOutcome::Failed(r)
    }
}

/// Finds the zeros of `phi`. Cells where every component changes sign are
/// screened on the samples; damped Newton on `sampler` then refines a zero
/// from each cell center. A zero is kept when it lies within two cells of the
/// cell it was started from. Hits closer than half a grid spacing are merged;
/// distinct zeros closer than one grid spacing are an error.
pub fn locate_zeros(phi: &PhiField, sampler: &dyn PhiSampler, opts: &ZeroSearchOptions) -> Result<ZeroSearch> {
    let grid = phi.grid();
    grid.require_rank(4)?;
    let axes = grid.axes();
    let cells_per_axis: Vec<usize> = axes
        .iter()
        .map(|a| if a.boundary == Boundary::Periodic { a.n } else { a.n - 1 })
        .collect();
    let ncells: usize = cells_per_axis.iter().product();
    let cell_index = |c: usize| -> [usize; 4] {
        let mut k = [0; 4];
        let mut rem = c;
        for i in (0..4).rev() {
            k[i] = rem % cells_per_axis[i];
            rem /= cells_per_axis[i];
        }
        k
    };
    let screened: Vec<usize> = (0..ncells)
        .into_par_iter()
        .filter(|&c| {
            let k = cell_index(c);
            let mut lo = [f64::INFINITY; 4];
            let mut hi = [f64::NEG_INFINITY; 4];
            for corner in 0..16 {
                let mut idx = [0; 4];
                for i in 0..4 {
                    idx[i] = (k[i] + ((corner >> i) & 1)) % axes[i].n;
                }
                let v = phi.phi(grid.index(&idx));
                for a in 0..4 {
                    lo[a] = lo[a].min(v[a]);
                    hi[a] = hi[a].max(v[a]);
                }
            }
            (0..4).all(|a| lo[a] <= 0.0 && hi[a] >= 0.0)
        })
        .collect();
    let outcomes: Vec<(usize, NewtonOutcome)> = screened
        .par_iter()
        .map(|&c| {
            let k = cell_index(c);
            let mut center = [0.0; 4];
            for i in 0..4 {
                center[i] = grid.coordinate(i, k[i]) + 0.5 * axes[i].spacing;
            }
            (c, newton(sampler, center, opts))
        })
        .collect();
    let hmax = grid.max_spacing();
    let mut zeros: Vec<[f64; 4]> = Vec::new();
    let mut suspicious = Vec::new();
    for (c, outcome) in outcomes {
        let k = cell_index(c);
        let center: [f64; 4] = std::array::from_fn(|i| grid.coordinate(i, k[i]) + 0.5 * axes[i].spacing);
        match outcome {
            NewtonOutcome::Converged(mut x) => {
                let near = (0..4).all(|i| (x[i] - center[i]).abs() <= 2.5 * axes[i].spacing);
                if !near {
                    continue;
                }
                canonicalize(grid, &mut x);
                if !zeros.iter().any(|z| distance(grid, z, &x) < 0.5 * hmax) {
                    zeros.push(x);
                }
            }
            NewtonOutcome::Failed(residual) => suspicious.push(SuspiciousCell { center, residual }),
        }
    }
    zeros.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    for i in 0..zeros.len() {
        for j in i + 1..zeros.len() {
            if distance(grid, &zeros[i], &zeros[j]) < hmax {
                return Err(Error::GridTooCoarse { first: i, second: j });
            }
        }
    }
    Ok(ZeroSearch { zeros, suspicious, screened_cells: screened.len() })
}

fn canonicalize(grid: &Grid, x: &mut [f64; 4]) {
    for (i, xi) in x.iter_mut().enumerate() {
        let ax = grid.axis(i);
        if ax.boundary == Boundary::Periodic {
            let len = ax.n as f64 * ax.spacing;
            *xi = ax.origin + (*xi - ax.origin).rem_euclid(len);
        }
    }
}

/// Euclidean distance with minimum-image wrapping on periodic axes.
fn distance(grid: &Grid, a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4)
        .map(|i| {
            let ax = grid.axis(i);
            let mut d = (a[i] - b[i]).abs();
            if ax.boundary == Boundary::Periodic {
                let len = ax.n as f64 * ax.spacing;
                d = d.min(len - d);
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Samples `phi(center + radius * u)` on the hyperspherical chart, with a
/// chain-rule jet when the sampler has a Jacobian.
pub fn sphere_field(sampler: &dyn PhiSampler, center: &[f64; 4], radius: f64, resolution: [usize; 3]) -> Result<PhiField> {
    let grid = s3_chart_grid_with(resolution[0], resolution[1], resolution[2])?;
    let len = grid.len();
    let with_jet = sampler.jacobian(center).is_some();
    let samples: Vec<([f64; 4], [[f64; 4]; 3])> = (0..len)
        .into_par_iter()
        .map(|site| {
            let c = grid.coord(site);
            let (u, du) = s3_chart_point(c[0], c[1], c[2]);
            let x: [f64; 4] = std::array::from_fn(|a| center[a] + radius * u.0[a]);
            let v = sampler.eval(&x).ok_or(Error::OutsideDomain)?;
            let mut d = [[0.0; 4]; 3];
            if with_jet {
                let j = sampler.jacobian(&x).ok_or(Error::OutsideDomain)?;
                for (alpha, dq) in du.iter().enumerate() {
                    for a in 0..4 {
                        d[alpha][a] = radius * (0..4).map(|mu| j[a][mu] * dq.0[mu]).sum::<f64>();
                    }
                }
            }
            Ok((v, d))
        })
        .collect::<Result<_>>()?;
    let values = samples.iter().flat_map(|(v, _)| *v).collect();
    let mut field = SampledField::new(grid, 4, values)?;
    if with_jet {
        let mut jet = vec![0.0; 3 * len * 4];
        for (site, (_, d)) in samples.iter().enumerate() {
            for alpha in 0..3 {
                jet[(alpha * len + site) * 4..(alpha * len + site) * 4 + 4].copy_from_slice(&d[alpha]);
            }
        }
        field = field.with_jet(jet)?;
    }
    PhiField::new(field)
}

/// `(1/2 pi^2) int det[n, d_chi n, d_theta n, d_phi n]` over a chart sample,
/// `n = phi / |phi|`; outward-first orientation.
pub fn surface_degree(sphere: &PhiField) -> Result<f64> {
    sphere.grid().require_rank(3)?;
    let n = unit_vector(sphere, DEFAULT_EPS_ZERO)?;
    let dn = n.gradient()?;
    let field = SampledField::from_site_fn(sphere.grid().clone(), 1, |site, out| {
        let v = n.n(site);
        let mut m = [[0.0; 4]; 4];
        for a in 0..4 {
            m[a][0] = v[a];
            for alpha in 0..3 {
                m[a][alpha + 1] = dn.at(alpha, site)[a];
            }
        }
        out[0] = det4(&m);
    });
    Ok(crate::lattice::integrate(&crate::lattice::ScalarField::from_sampled(field)?)? / (2.0 * PI * PI))
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeEstimate {
    pub value: f64,
    pub degree: i64,
    pub deviation: f64,
    pub resolution: [usize; 3],
    pub radius: f64,
}

/// Surface degree around `center`, doubling the chart resolution (at most
/// `max_refinements` times) while the rounding deviation exceeds 0.1.
/// A final deviation of 0.2 or more is an error.
pub fn local_degree(sampler: &dyn PhiSampler, center: &[f64; 4], radius: f64, resolution: [usize; 3], max_refinements: usize) -> Result<DegreeEstimate> {
    let mut res = resolution;
    let mut refinements = 0;
    loop {
        let value = surface_degree(&sphere_field(sampler, center, radius, res)?)?;
        let degree = value.round();
        let deviation = (value - degree).abs();
        if deviation <= 0.1 || refinements == max_refinements {
            if deviation >= 0.2 {
                return Err(Error::DegreeResolution { value, deviation });
            }
            return Ok(DegreeEstimate { value, degree: degree as i64, deviation, resolution: res, radius });
        }
        res = res.map(|n| 2 * n);
        refinements += 1;
    }
}

/// Knot charge of `phi / |phi|` restricted to a sphere: its Chern-Simons flux.
pub fn sphere_cs_flux(sampler: &dyn PhiSampler, center: &[f64; 4], radius: f64, resolution: [usize; 3]) -> Result<f64> {
    let sphere = sphere_field(sampler, center, radius, resolution)?;
    let psi = normalize(&phi_to_spinor(&sphere), DEFAULT_EPS_ZERO)?;
    Ok(knot_charge(&psi, CsMethod::Spinor, Orientation::default())?.q)
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroPoint {
    pub position: [f64; 4],
    /// `det(d phi)` at the zero.
    pub jacobian: f64,
    pub degenerate: bool,
    pub degree: DegreeEstimate,
    /// Hopf index.
    pub beta: i64,
    /// Brouwer sign.
    pub eta: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerOptions {
    pub search: ZeroSearchOptions,
    /// `|det d phi|` below which a zero counts as degenerate.
    pub degenerate_threshold: f64,
    pub sphere_resolution: [usize; 3],
    pub max_refinements: usize,
    /// Excision radius in units of the largest grid spacing.
    pub excision_factor: f64,
}

impl Default for LedgerOptions {
    fn default() -> Self {
        LedgerOptions {
            search: ZeroSearchOptions::default(),
            degenerate_threshold: 1e-8,
            sphere_resolution: [32, 32, 64],
            max_refinements: 2,
            excision_factor: 3.0,
        }
    }
}

/// The density route: Chern number outside the excision balls plus the
/// Chern-Simons flux through each excision sphere.
#[derive(Debug, Clone, Serialize)]
pub struct ExcisedChern {
    pub outside: SecondChern,
    pub radius: f64,
    pub sphere_flux: Vec<f64>,
    pub value: f64,
}

/// Tolerance on `|C2 - sum beta eta|` for the ledger to pass.
pub const LEDGER_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct ChargeLedger {
    pub zeros: Vec<ZeroPoint>,
    pub suspicious: Vec<SuspiciousCell>,
    pub sum_beta_eta: i64,
    /// Euler characteristic reading of the same sum.
    pub chi: i64,
    pub c2: ExcisedChern,
    /// Chern-Simons flux of `n` through the outer boundary of the box, when
    /// the grid is an open node-centered box.
    pub boundary_flux: Option<f64>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// Locates the zeros of `phi`, assigns `(beta, eta)` to each and compares the
/// sum with the density-route second Chern number.
pub fn charge_ledger(phi: &PhiField, sampler: &dyn PhiSampler, opts: &LedgerOptions) -> Result<ChargeLedger> {
    let grid = phi.grid();
    grid.require_rank(4)?;
    let search = locate_zeros(phi, sampler, &opts.search)?;
    let mut warnings = Vec::new();
    for s in &search.suspicious {
        warnings.push(format!("Newton did not converge from cell centered at {:?} (|phi| = {:e})", s.center, s.residual));
    }
    let hmax = grid.max_spacing();
    let sep = |i: usize| -> f64 {
        search
            .zeros
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, z)| distance(grid, z, &search.zeros[i]))
            .fold(f64::INFINITY, f64::min)
    };
    let min_sep = (0..search.zeros.len()).map(sep).fold(f64::INFINITY, f64::min);
    let radius = (opts.excision_factor * hmax).min(0.45 * min_sep);

    let mut zeros = Vec::new();
    for (i, z) in search.zeros.iter().enumerate() {
        if sep(i) <= radius {
            return Err(Error::SphereNotIsolated { zero: i, radius });
        }
        let j = sampler_jacobian(sampler, z).ok_or(Error::OutsideDomain)?;
        let jac = det4(&j);
        let degenerate = jac.abs() < opts.degenerate_threshold;
        let degree = local_degree(sampler, z, radius, opts.sphere_resolution, opts.max_refinements)?;
        let (beta, eta) = if degenerate {
            (degree.degree.abs(), degree.degree.signum())
        } else {
            let sign = if jac > 0.0 { 1 } else { -1 };
            if degree.degree != sign {
                return Err(Error::InconsistentDegree { degree: degree.degree, jacobian_sign: sign });
            }
            (1, sign)
        };
        if degree.degree == 0 {
            warnings.push(format!("zero at {z:?} has surface degree 0 and is left out of the sum"));
        }
        zeros.push(ZeroPoint { position: *z, jacobian: jac, degenerate, degree, beta, eta });
    }
    let sum_beta_eta: i64 = zeros.iter().filter(|z| z.degree.degree != 0).map(|z| z.beta * z.eta).sum();

    let centers: Vec<[f64; 4]> = search.zeros.clone();
    let mask = Mask::balls(grid, &centers, radius);
    let outside = second_chern_number(&chern_density_unit(phi, Some(&mask))?.density, Some(&mask))?;
    let sphere_flux = centers
        .iter()
        .map(|c| sphere_cs_flux(sampler, c, radius, opts.sphere_resolution))
        .collect::<Result<Vec<f64>>>()?;
    let value = outside.value + sphere_flux.iter().sum::<f64>();
    if !outside.reliable {
        warnings.push(format!("excision removes {:.1}% of the volume", 100.0 * outside.excluded_fraction));
    }

    let boundary_flux = if grid.axes().iter().all(|a| a.boundary == Boundary::Open) && !grid.is_cell_centered() {
        let n = unit_vector_excluding(phi, DEFAULT_EPS_ZERO, Some(&mask))?;
        let psi = crate::fields::SpinorField::new(n.as_sampled().clone())?;
        Some(crate::chern_density::boundary_cs_flux(&psi)?)
    } else {
        None
    };

    let pass = (value - sum_beta_eta as f64).abs() < LEDGER_TOLERANCE;
    Ok(ChargeLedger {
        zeros,
        suspicious: search.suspicious,
        sum_beta_eta,
        chi: sum_beta_eta,
        c2: ExcisedChern { outside, radius, sphere_flux, value },
        boundary_flux,
        warnings,
        pass,
    })
}
