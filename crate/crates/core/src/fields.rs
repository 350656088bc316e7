//! Field containers: spinor, phi, unit vector, sigma-model, gauge and SU(2)
//! fields, with conversions between them and gauge transformations.
//!
//! Every container wraps a [`SampledField`]; exact first-derivative jets are
//! carried through every conversion that can propagate them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Gradient, Grid, Mask, SampledField};
use crate::su2::{pauli, Matrix2C, Spinor, Su2Element, C64, PREDICATE_TOL};

/// Default threshold below which a spinor or phi sample counts as a zero.
pub const DEFAULT_EPS_ZERO: f64 = 1e-12;

/// Tolerance on `|psi|^2 - 1` for a spinor to count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-10;

fn expect_ncomp(field: &SampledField, ncomp: usize) -> Result<()> {
    if field.ncomp() != ncomp {
        return Err(Error::ComponentMismatch { expected: ncomp, found: field.ncomp() });
    }
    Ok(())
}

/// Two complex components per site, stored as `(Re psi1, Im psi1, Re psi2, Im psi2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    field: SampledField,
    normalized: bool,
}

impl SpinorField {
    pub fn new(field: SampledField) -> Result<Self> {
        expect_ncomp(&field, 4)?;
        Ok(SpinorField { field, normalized: false })
    }

    /// Checks `psi^dagger psi = 1` everywhere and marks the field normalized.
    pub fn assume_normalized(mut self) -> Result<Self> {
        self.check_normalized()?;
        self.normalized = true;
        Ok(self)
    }

    pub fn check_normalized(&self) -> Result<()> {
        for site in 0..self.grid().len() {
            let n = self.psi(site).norm_sqr();
            if (n - 1.0).abs() > NORMALIZED_TOL {
                return Err(Error::NotNormalized { site, norm_sq: n });
            }
        }
        Ok(())
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn as_sampled(&self) -> &SampledField {
        &self.field
    }

    pub fn into_sampled(self) -> SampledField {
        self.field
    }

    pub fn has_jet(&self) -> bool {
        self.field.has_jet()
    }

    #[inline]
    pub fn psi(&self, site: usize) -> Spinor {
        Spinor::from_reals(self.field.site(site))
    }

    /// Derivative samples along every axis (jet or central differences).
    pub fn gradient(&self) -> Result<SpinorGradient> {
        Ok(SpinorGradient(self.field.gradient()?))
    }

    /// Multiplies every sample and jet entry by a constant complex factor.
    pub fn scaled(&self, s: C64) -> SpinorField {
        let map = |v: &[f64]| -> Vec<f64> {
            v.chunks(4).flat_map(|c| Spinor::from_reals(c).scale(s).to_reals()).collect()
        };
        let mut field = SampledField::new(self.grid().clone(), 4, map(self.field.values())).expect("same shape");
        if let Some(j) = self.field.jet() {
            field = field.with_jet(map(j)).expect("same shape");
        }
        SpinorField { field, normalized: self.normalized && (s.norm() - 1.0).abs() < 1e-15 }
    }
}

/// Spinor-valued derivative samples.
#[derive(Debug, Clone)]
pub struct SpinorGradient(Gradient);

impl SpinorGradient {
    #[inline]
    pub fn at(&self, axis: usize, site: usize) -> Spinor {
        Spinor::from_reals(self.0.at(axis, site))
    }

    pub fn is_exact(&self) -> bool {
        self.0.is_exact()
    }

    pub fn rank(&self) -> usize {
        self.0.rank()
    }
}

/// Four real components `phi^a`, `a = 0..3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiField(SampledField);

impl PhiField {
    pub fn new(field: SampledField) -> Result<Self> {
        expect_ncomp(&field, 4)?;
        field.check_finite()?;
        Ok(PhiField(field))
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn as_sampled(&self) -> &SampledField {
        &self.0
    }

    pub fn into_sampled(self) -> SampledField {
        self.0
    }

    #[inline]
    pub fn phi(&self, site: usize) -> [f64; 4] {
        let s = self.0.site(site);
        [s[0], s[1], s[2], s[3]]
    }

    pub fn gradient(&self) -> Result<Gradient> {
        self.0.gradient()
    }

    pub fn has_jet(&self) -> bool {
        self.0.has_jet()
    }
}

/// Unit four-vector `n^a = phi^a / |phi|`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitField(SampledField);

impl UnitField {
    pub fn new(field: SampledField) -> Result<Self> {
        expect_ncomp(&field, 4)?;
        for site in 0..field.grid().len() {
            let n: f64 = field.site(site).iter().map(|v| v * v).sum();
            if (n - 1.0).abs() > NORMALIZED_TOL {
                return Err(Error::NotNormalized { site, norm_sq: n });
            }
        }
        Ok(UnitField(field))
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn as_sampled(&self) -> &SampledField {
        &self.0
    }

    #[inline]
    pub fn n(&self, site: usize) -> [f64; 4] {
        let s = self.0.site(site);
        [s[0], s[1], s[2], s[3]]
    }

    pub fn gradient(&self) -> Result<Gradient> {
        self.0.gradient()
    }
}

/// Unit three-vector `m^a = psi^dagger sigma_a psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct MField(SampledField);

impl MField {
    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn as_sampled(&self) -> &SampledField {
        &self.0
    }

    #[inline]
    pub fn m(&self, site: usize) -> [f64; 3] {
        let s = self.0.site(site);
        [s[0], s[1], s[2]]
    }

    pub fn gradient(&self) -> Result<Gradient> {
        self.0.gradient()
    }
}

/// Gauge potential components `A_mu^a`, stored per site at `mu * 3 + a`.
/// The jet, when present, holds `d_nu A_mu^a` under axis `nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField(SampledField);

impl GaugeField {
    pub fn new(field: SampledField) -> Result<Self> {
        let expected = 3 * field.grid().rank();
        expect_ncomp(&field, expected)?;
        Ok(GaugeField(field))
    }

    /// The zero potential, with an exact (zero) jet.
    pub fn zero(grid: Grid) -> Self {
        let nc = 3 * grid.rank();
        let jet = vec![0.0; grid.len() * nc * grid.rank()];
        GaugeField(SampledField::zeros(grid, nc).with_jet(jet).expect("jet sized to grid"))
    }

    /// Builds a gauge field from per-site, per-axis algebra matrices, storing
    /// their real components. Returns the field and the largest projection
    /// residual encountered.
    pub fn from_matrices<F>(grid: Grid, f: F) -> (Self, f64)
    where
        F: Fn(usize, usize) -> Matrix2C + Sync,
    {
        let rank = grid.rank();
        let residuals: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|site| {
                (0..rank)
                    .map(|mu| f(site, mu).project_su2_algebra().1)
                    .fold(0.0, f64::max)
            })
            .collect();
        let field = SampledField::from_site_fn(grid, 3 * rank, |site, out| {
            for mu in 0..rank {
                let (p, _) = f(site, mu).project_su2_algebra();
                let (c, _) = p.algebra_components();
                out[mu * 3..mu * 3 + 3].copy_from_slice(&c);
            }
        });
        (GaugeField(field), residuals.into_iter().fold(0.0, f64::max))
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn as_sampled(&self) -> &SampledField {
        &self.0
    }

    pub fn into_sampled(self) -> SampledField {
        self.0
    }

    pub fn has_jet(&self) -> bool {
        self.0.has_jet()
    }

    #[inline]
    pub fn component(&self, site: usize, mu: usize) -> [f64; 3] {
        let s = self.0.site(site);
        [s[mu * 3], s[mu * 3 + 1], s[mu * 3 + 2]]
    }

    /// Matrix form `A_mu = A_mu^a sigma_a / (2i)`.
    #[inline]
    pub fn matrix(&self, site: usize, mu: usize) -> Matrix2C {
        Matrix2C::from_algebra(&self.component(site, mu))
    }

    pub fn gradient(&self) -> Result<GaugeGradient> {
        Ok(GaugeGradient(self.0.gradient()?))
    }

    /// Largest `|A_mu^a|` over the grid.
    pub fn max_abs(&self) -> f64 {
        self.0.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `d_nu A_mu^a` samples.
#[derive(Debug, Clone)]
pub struct GaugeGradient(Gradient);

impl GaugeGradient {
    #[inline]
    pub fn component(&self, nu: usize, site: usize, mu: usize) -> [f64; 3] {
        let s = self.0.at(nu, site);
        [s[mu * 3], s[mu * 3 + 1], s[mu * 3 + 2]]
    }

    pub fn matrix(&self, nu: usize, site: usize, mu: usize) -> Matrix2C {
        Matrix2C::from_algebra(&self.component(nu, site, mu))
    }

    pub fn is_exact(&self) -> bool {
        self.0.is_exact()
    }
}

pub fn matrix_from_reals(r: &[f64]) -> Matrix2C {
    Matrix2C([
        [C64::new(r[0], r[1]), C64::new(r[2], r[3])],
        [C64::new(r[4], r[5]), C64::new(r[6], r[7])],
    ])
}

pub fn matrix_to_reals(m: &Matrix2C, out: &mut [f64]) {
    let e = &m.0;
    out.copy_from_slice(&[
        e[0][0].re, e[0][0].im, e[0][1].re, e[0][1].im, e[1][0].re, e[1][0].im, e[1][1].re, e[1][1].im,
    ]);
}

/// Index of the unordered axis pair `(mu, nu)` in the packed second-derivative
/// layout of a rank-`r` field.
pub fn pair_index(rank: usize, mu: usize, nu: usize) -> usize {
    let (a, b) = if mu <= nu { (mu, nu) } else { (nu, mu) };
    // pairs (0,0),(0,1),..,(0,r-1),(1,1),..
    a * rank - a * (a.saturating_sub(1)) / 2 + (b - a)
}

pub fn pair_count(rank: usize) -> usize {
    rank * (rank + 1) / 2
}

/// One SU(2) element per site, with optional first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Su2Field {
    field: SampledField,
    second: Option<Vec<f64>>,
}

impl Su2Field {
    pub fn new(field: SampledField) -> Result<Self> {
        expect_ncomp(&field, 8)?;
        for site in 0..field.grid().len() {
            let m = matrix_from_reals(field.site(site));
            let unitarity = m.unitarity_residual();
            let det = (m.det() - C64::new(1.0, 0.0)).norm();
            if unitarity >= PREDICATE_TOL || det >= PREDICATE_TOL {
                return Err(Error::NotSu2 { site, unitarity, det });
            }
        }
        Ok(Su2Field { field, second: None })
    }

    /// Builds a field from per-site matrices and their derivatives.
    /// `f(site) -> (S, [dS/dx_mu], [d2S/dx_mu dx_nu] packed by pair_index)`.
    pub fn from_site_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(usize) -> (Matrix2C, Vec<Matrix2C>, Vec<Matrix2C>) + Sync,
    {
        let rank = grid.rank();
        let len = grid.len();
        let npairs = pair_count(rank);
        let samples: Vec<_> = (0..len).into_par_iter().map(&f).collect();
        let field = SampledField::from_site_fn_with_jet(grid, 8, |site, v, j| {
            let (s, d, _) = &samples[site];
            matrix_to_reals(s, v);
            for mu in 0..rank {
                matrix_to_reals(&d[mu], &mut j[mu * 8..mu * 8 + 8]);
            }
        });
        let mut second = vec![0.0; npairs * len * 8];
        second.par_chunks_mut(len * 8).enumerate().for_each(|(p, chunk)| {
            for (site, (_, _, dd)) in samples.iter().enumerate() {
                matrix_to_reals(&dd[p], &mut chunk[site * 8..site * 8 + 8]);
            }
        });
        let mut out = Su2Field::new(field)?;
        out.second = Some(second);
        Ok(out)
    }

    pub fn identity(grid: Grid) -> Self {
        let rank = grid.rank();
        let field = SampledField::from_site_fn_with_jet(grid.clone(), 8, |_, v, j| {
            matrix_to_reals(&Matrix2C::identity(), v);
            j.iter_mut().for_each(|x| *x = 0.0);
        });
        let second = vec![0.0; pair_count(rank) * grid.len() * 8];
        Su2Field { field, second: Some(second) }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn as_sampled(&self) -> &SampledField {
        &self.field
    }

    pub fn has_jet(&self) -> bool {
        self.field.has_jet()
    }

    pub fn has_second_derivatives(&self) -> bool {
        self.second.is_some()
    }

    pub fn without_second_derivatives(mut self) -> Self {
        self.second = None;
        self
    }

    #[inline]
    pub fn matrix(&self, site: usize) -> Matrix2C {
        matrix_from_reals(self.field.site(site))
    }

    pub fn element(&self, site: usize) -> Su2Element {
        Su2Element::new(self.matrix(site)).expect("validated at construction")
    }

    /// First derivatives: jet or central differences.
    pub fn gradient(&self) -> Result<Su2Gradient> {
        Ok(Su2Gradient(self.field.gradient()?))
    }

    pub fn second_derivative(&self, mu: usize, nu: usize, site: usize) -> Option<Matrix2C> {
        let len = self.grid().len();
        let p = pair_index(self.grid().rank(), mu, nu);
        self.second
            .as_ref()
            .map(|s| matrix_from_reals(&s[(p * len + site) * 8..(p * len + site + 1) * 8]))
    }

    /// Pointwise product `self * other` with product-rule jets.
    pub fn compose(&self, other: &Su2Field) -> Result<Su2Field> {
        if !self.grid().same_as(other.grid()) {
            return Err(Error::GridMismatch);
        }
        let rank = self.grid().rank();
        let ga = self.gradient()?;
        let gb = other.gradient()?;
        let both_second = self.second.is_some() && other.second.is_some();
        let f = |site: usize| {
            let (a, b) = (self.matrix(site), other.matrix(site));
            let d: Vec<Matrix2C> =
                (0..rank).map(|mu| ga.matrix(mu, site) * b + a * gb.matrix(mu, site)).collect();
            let mut dd = vec![Matrix2C::zero(); pair_count(rank)];
            if both_second {
                for mu in 0..rank {
                    for nu in mu..rank {
                        dd[pair_index(rank, mu, nu)] = self.second_derivative(mu, nu, site).unwrap() * b
                            + ga.matrix(mu, site) * gb.matrix(nu, site)
                            + ga.matrix(nu, site) * gb.matrix(mu, site)
                            + a * other.second_derivative(mu, nu, site).unwrap();
                    }
                }
            }
            (a * b, d, dd)
        };
        let out = Su2Field::from_site_fn(self.grid().clone(), f)?;
        Ok(if both_second { out } else { out.without_second_derivatives() })
    }
}

#[derive(Debug, Clone)]
pub struct Su2Gradient(Gradient);

impl Su2Gradient {
    #[inline]
    pub fn matrix(&self, axis: usize, site: usize) -> Matrix2C {
        matrix_from_reals(self.0.at(axis, site))
    }

    pub fn is_exact(&self) -> bool {
        self.0.is_exact()
    }
}

/// Normalizes a spinor field, carrying the jet through the quotient rule.
pub fn normalize(psi: &SpinorField, eps_zero: f64) -> Result<SpinorField> {
    let grid = psi.grid().clone();
    let rank = grid.rank();
    let len = grid.len();
    if let Some(site) = (0..len).find(|&s| psi.psi(s).norm_sqr().sqrt() < eps_zero) {
        return Err(Error::Normalization { site, norm: psi.psi(site).norm_sqr().sqrt() });
    }
    let field = if psi.has_jet() {
        let src = psi.as_sampled();
        SampledField::from_site_fn_with_jet(grid, 4, |site, v, j| {
            let p = psi.psi(site);
            let n = p.norm_sqr().sqrt();
            let pn = p.scale(C64::new(1.0 / n, 0.0));
            v.copy_from_slice(&pn.to_reals());
            for mu in 0..rank {
                let d = Spinor::from_reals(src.jet_at(mu, site).unwrap());
                let dn = p.dot(&d).re / n;
                let out = d.scale(C64::new(1.0 / n, 0.0)) - p.scale(C64::new(dn / (n * n), 0.0));
                j[mu * 4..mu * 4 + 4].copy_from_slice(&out.to_reals());
            }
        })
    } else {
        SampledField::from_site_fn(grid, 4, |site, v| {
            let p = psi.psi(site);
            let n = p.norm_sqr().sqrt();
            v.copy_from_slice(&p.scale(C64::new(1.0 / n, 0.0)).to_reals());
        })
    };
    Ok(SpinorField { field, normalized: true })
}

/// `phi = (Re psi1, Im psi1, Re psi2, Im psi2)`; the storage layouts coincide.
pub fn spinor_to_phi(psi: &SpinorField) -> PhiField {
    PhiField(psi.field.clone())
}

/// Inverse of [`spinor_to_phi`].
pub fn phi_to_spinor(phi: &PhiField) -> SpinorField {
    SpinorField { field: phi.0.clone(), normalized: false }
}

/// `n^a = phi^a / |phi|`, jets by the quotient rule.
pub fn unit_vector(phi: &PhiField, eps_zero: f64) -> Result<UnitField> {
    unit_vector_excluding(phi, eps_zero, None)
}

/// As [`unit_vector`], except that sites in `mask` whose norm falls below
/// `eps_zero` get the placeholder `n = (1, 0, 0, 0)` with zero jet instead of
/// an error.
pub fn unit_vector_excluding(phi: &PhiField, eps_zero: f64, mask: Option<&Mask>) -> Result<UnitField> {
    let grid = phi.grid().clone();
    let rank = grid.rank();
    let len = grid.len();
    let norm = |s: usize| phi.phi(s).iter().map(|v| v * v).sum::<f64>().sqrt();
    if let Some(site) = (0..len).find(|&s| norm(s) < eps_zero && !mask.is_some_and(|m| m.is_excluded(s))) {
        return Err(Error::Normalization { site, norm: norm(site) });
    }
    let placeholder = |s: usize| norm(s) < eps_zero;
    let field = if phi.has_jet() {
        let src = phi.as_sampled();
        SampledField::from_site_fn_with_jet(grid, 4, |site, v, j| {
            if placeholder(site) {
                v.copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
                j.iter_mut().for_each(|x| *x = 0.0);
                return;
            }
            let p = phi.phi(site);
            let r = norm(site);
            for a in 0..4 {
                v[a] = p[a] / r;
            }
            for mu in 0..rank {
                let d = src.jet_at(mu, site).unwrap();
                let dr: f64 = (0..4).map(|a| p[a] * d[a]).sum::<f64>() / r;
                for a in 0..4 {
                    j[mu * 4 + a] = d[a] / r - p[a] * dr / (r * r);
                }
            }
        })
    } else {
        SampledField::from_site_fn(grid, 4, |site, v| {
            if placeholder(site) {
                v.copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
                return;
            }
            let p = phi.phi(site);
            let r = norm(site);
            for a in 0..4 {
                v[a] = p[a] / r;
            }
        })
    };
    Ok(UnitField(field))
}

/// Imaginary residue above which `psi^dagger sigma_a psi` counts as corrupted.
pub const M_FIELD_RESIDUE_TOL: f64 = 1e-12;

/// `m^a = psi^dagger sigma_a psi` for a normalized spinor; jets give
/// `d m^a = 2 Re(psi^dagger sigma_a d psi)`.
pub fn sigma_model_field(psi: &SpinorField) -> Result<MField> {
    psi.check_normalized()?;
    let grid = psi.grid().clone();
    let rank = grid.rank();
    for site in 0..grid.len() {
        let p = psi.psi(site);
        for a in 0..3 {
            let z = p.dot(&pauli(a).apply(&p));
            if z.im.abs() > M_FIELD_RESIDUE_TOL {
                return Err(Error::ImaginaryResidue { site, residue: z.im.abs() });
            }
        }
    }
    let m_at = |p: &Spinor, out: &mut [f64]| {
        for a in 0..3 {
            out[a] = p.dot(&pauli(a).apply(p)).re;
        }
    };
    let field = if psi.has_jet() {
        let src = psi.as_sampled();
        SampledField::from_site_fn_with_jet(grid, 3, |site, v, j| {
            let p = psi.psi(site);
            m_at(&p, v);
            for mu in 0..rank {
                let d = Spinor::from_reals(src.jet_at(mu, site).unwrap());
                for a in 0..3 {
                    j[mu * 3 + a] = 2.0 * p.dot(&pauli(a).apply(&d)).re;
                }
            }
        })
    } else {
        SampledField::from_site_fn(grid, 3, |site, v| m_at(&psi.psi(site), v))
    };
    Ok(MField(field))
}

/// Result of a gauge transformation.
#[derive(Debug, Clone)]
pub struct GaugeTransformed {
    pub psi: SpinorField,
    pub gauge: GaugeField,
    /// Largest anti-Hermitian traceless projection residual of the transformed
    /// potential.
    pub projection_residual: f64,
    /// Whether `dS` came from an exact jet.
    pub exact: bool,
}

/// `psi' = S psi`, `A'_mu = S A_mu S^dagger + (d_mu S) S^dagger`.
///
/// The transformed spinor carries a jet when `psi` does. The transformed
/// potential carries a jet when `A` has one and `S` has second derivatives.
pub fn gauge_transform(psi: &SpinorField, gauge: &GaugeField, s: &Su2Field) -> Result<GaugeTransformed> {
    let grid = psi.grid().clone();
    if !grid.same_as(gauge.grid()) || !grid.same_as(s.grid()) {
        return Err(Error::GridMismatch);
    }
    let rank = grid.rank();
    let ds = s.gradient()?;
    let exact = ds.is_exact();
    let psi_field = if psi.has_jet() {
        let src = psi.as_sampled();
        SampledField::from_site_fn_with_jet(grid.clone(), 4, |site, v, j| {
            let sm = s.matrix(site);
            let p = psi.psi(site);
            v.copy_from_slice(&sm.apply(&p).to_reals());
            for mu in 0..rank {
                let d = Spinor::from_reals(src.jet_at(mu, site).unwrap());
                let out = ds.matrix(mu, site).apply(&p) + sm.apply(&d);
                j[mu * 4..mu * 4 + 4].copy_from_slice(&out.to_reals());
            }
        })
    } else {
        SampledField::from_site_fn(grid.clone(), 4, |site, v| {
            v.copy_from_slice(&s.matrix(site).apply(&psi.psi(site)).to_reals())
        })
    };
    let transformed = |site: usize, mu: usize| {
        let sm = s.matrix(site);
        let sd = sm.adjoint();
        sm * gauge.matrix(site, mu) * sd + ds.matrix(mu, site) * sd
    };
    let (mut new_gauge, projection_residual) = GaugeField::from_matrices(grid.clone(), transformed);
    if gauge.has_jet() && s.has_second_derivatives() {
        let ga = gauge.gradient()?;
        let nc = 3 * rank;
        let jet_field = SampledField::from_site_fn(grid.clone(), nc * rank, |site, out| {
            let sm = s.matrix(site);
            let sd = sm.adjoint();
            for nu in 0..rank {
                let dnu = ds.matrix(nu, site);
                let dnu_d = dnu.adjoint();
                for mu in 0..rank {
                    let a = gauge.matrix(site, mu);
                    let dmu = ds.matrix(mu, site);
                    let m = dnu * a * sd
                        + sm * ga.matrix(nu, site, mu) * sd
                        + sm * a * dnu_d
                        + s.second_derivative(mu, nu, site).unwrap() * sd
                        + dmu * dnu_d;
                    let (p, _) = m.project_su2_algebra();
                    let (c, _) = p.algebra_components();
                    out[nu * nc + mu * 3..nu * nc + mu * 3 + 3].copy_from_slice(&c);
                }
            }
        });
        let len = grid.len();
        let packed = jet_field.values();
        let mut jet = vec![0.0; len * nc * rank];
        for site in 0..len {
            for nu in 0..rank {
                let src = &packed[site * nc * rank + nu * nc..site * nc * rank + (nu + 1) * nc];
                jet[(nu * len + site) * nc..(nu * len + site + 1) * nc].copy_from_slice(src);
            }
        }
        new_gauge = GaugeField(new_gauge.0.with_jet(jet)?);
    }
    Ok(GaugeTransformed {
        psi: SpinorField { field: psi_field, normalized: psi.normalized },
        gauge: new_gauge,
        projection_residual,
        exact,
    })
}
