//! Analytic test configurations with exact jets.
//!
//! * the identity map of S^3 on the hyperspherical chart,
//! * quaternion powers `q^n` and left-ordered quaternion polynomials
//!   `(q - c_1)(q - c_2)...`,
//! * affine fields `M (x - c)`,
//! * seeded band-limited random spinor, gauge and SU(2) fields.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conventions::det4;
use crate::error::{Error, Result};
use crate::fields::{pair_count, pair_index, phi_to_spinor, GaugeField, PhiField, SpinorField, Su2Field};
use crate::lattice::{Axis, Boundary, Grid, SampledField, MAX_RANK};
use crate::phi_mapping::PhiSampler;
use crate::su2::{generator, Matrix2C, Su2Element};

/// Quaternion `w + x i + y j + z k`, identified with `(w, x, y, z)` in R^4.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Quaternion(pub [f64; 4]);

impl Quaternion {
    pub const ONE: Quaternion = Quaternion([1.0, 0.0, 0.0, 0.0]);

    pub fn conj(&self) -> Self {
        let q = self.0;
        Quaternion([q[0], -q[1], -q[2], -q[3]])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn inverse(&self) -> Self {
        let n = self.norm_sqr();
        let c = self.conj().0;
        Quaternion([c[0] / n, c[1] / n, c[2] / n, c[3] / n])
    }

    pub fn scale(&self, s: f64) -> Self {
        Quaternion(self.0.map(|v| v * s))
    }

    /// Basis element `e_mu` (1, i, j, k).
    pub fn basis(mu: usize) -> Self {
        let mut q = [0.0; 4];
        q[mu] = 1.0;
        Quaternion(q)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Quaternion::ONE;
        }
        let base = if n > 0 { *self } else { self.inverse() };
        let mut acc = base;
        for _ in 1..n.unsigned_abs() {
            acc = acc * base;
        }
        acc
    }

    /// Directional derivative of `q -> q^n` along `v`.
    pub fn pow_derivative(&self, n: i32, v: &Quaternion) -> Self {
        if n == 0 {
            return Quaternion::default();
        }
        if n == 1 {
            return *v;
        }
        let m = n.unsigned_abs() as i32;
        let (base, dbase) = if n > 0 {
            (*self, *v)
        } else {
            let p = self.inverse();
            (p, -(p * *v * p))
        };
        let mut sum = Quaternion::default();
        for k in 0..m {
            sum = sum + base.powi(k) * dbase * base.powi(m - 1 - k);
        }
        sum
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Self) -> Self {
        Quaternion([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Self) -> Self {
        Quaternion([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2], self.0[3] - o.0[3]])
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Self {
        Quaternion(self.0.map(|v| -v))
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Self) -> Self {
        let [a1, b1, c1, d1] = self.0;
        let [a2, b2, c2, d2] = o.0;
        Quaternion([
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ])
    }
}

/// The hyperspherical chart grid of S^3: `(chi, theta, phi)` over
/// `(0, pi) x (0, pi) x (0, 2 pi)`, cell-centered, periodic in `phi` only.
pub fn s3_chart_grid(resolution: usize) -> Result<Grid> {
    s3_chart_grid_with(resolution, resolution, resolution)
}

pub fn s3_chart_grid_with(n_chi: usize, n_theta: usize, n_phi: usize) -> Result<Grid> {
    Ok(Grid::new(vec![
        Axis::open(n_chi, 0.0, PI / n_chi as f64),
        Axis::open(n_theta, 0.0, PI / n_theta as f64),
        Axis::periodic(n_phi, 0.0, 2.0 * PI / n_phi as f64),
    ])?
    .cell_centered(true))
}

/// Point of the unit 3-sphere at chart coordinates and its three chart
/// derivatives.
pub fn s3_chart_point(chi: f64, theta: f64, phi: f64) -> (Quaternion, [Quaternion; 3]) {
    let (sc, cc) = chi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let u = Quaternion([cc, sc * ct, sc * st * cp, sc * st * sp]);
    let d_chi = Quaternion([-sc, cc * ct, cc * st * cp, cc * st * sp]);
    let d_theta = Quaternion([0.0, -sc * st, sc * ct * cp, sc * ct * sp]);
    let d_phi = Quaternion([0.0, 0.0, -sc * st * sp, sc * st * cp]);
    (u, [d_chi, d_theta, d_phi])
}

/// Where a generator is evaluated.
#[derive(Debug, Clone)]
pub enum Domain {
    /// Hyperspherical chart of the unit S^3 with the given cells per axis.
    S3Chart(usize),
    /// Rank-4 grid, coordinates read as `q = x0 + x1 i + x2 j + x3 k`.
    Box(Grid),
}

/// The identity map of S^3 as a normalized spinor `(n0 + i n1, n2 + i n3)`.
pub fn identity_map_s3(resolution: usize) -> Result<SpinorField> {
    if resolution < 8 {
        return Err(Error::InvalidParameter(format!("S^3 chart resolution {resolution} < 8")));
    }
    let phi = quaternion_power_field(1, &Domain::S3Chart(resolution))?;
    phi_to_spinor(&phi).assume_normalized()
}

/// Analytic phi-maps that can be evaluated anywhere, with exact Jacobians.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticPhi {
    /// `phi = M (x - c)`.
    Linear { matrix: [[f64; 4]; 4], shift: [f64; 4] },
    /// `phi = q^n`.
    Power { n: i32 },
    /// `phi = (q - c_1)(q - c_2)...`.
    Polynomial { roots: Vec<[f64; 4]> },
}

impl AnalyticPhi {
    pub fn value(&self, x: &[f64; 4]) -> [f64; 4] {
        let q = Quaternion(*x);
        match self {
            AnalyticPhi::Linear { matrix, shift } => {
                let mut out = [0.0; 4];
                for (a, o) in out.iter_mut().enumerate() {
                    *o = (0..4).map(|mu| matrix[a][mu] * (x[mu] - shift[mu])).sum();
                }
                out
            }
            AnalyticPhi::Power { n } => {
                if *n == 1 {
                    *x
                } else {
                    q.powi(*n).0
                }
            }
            AnalyticPhi::Polynomial { roots } => roots
                .iter()
                .fold(Quaternion::ONE, |acc, c| acc * (q - Quaternion(*c)))
                .0,
        }
    }

    /// Derivative of the map along the direction `v` at `x`.
    pub fn directional(&self, x: &[f64; 4], v: &Quaternion) -> [f64; 4] {
        let q = Quaternion(*x);
        match self {
            AnalyticPhi::Linear { matrix, .. } => {
                let mut out = [0.0; 4];
                for (a, o) in out.iter_mut().enumerate() {
                    *o = (0..4).map(|mu| matrix[a][mu] * v.0[mu]).sum();
                }
                out
            }
            AnalyticPhi::Power { n } => q.pow_derivative(*n, v).0,
            AnalyticPhi::Polynomial { roots } => {
                let factors: Vec<Quaternion> = roots.iter().map(|c| q - Quaternion(*c)).collect();
                let mut sum = Quaternion::default();
                for i in 0..factors.len() {
                    let mut term = Quaternion::ONE;
                    for (j, f) in factors.iter().enumerate() {
                        term = term * if i == j { *v } else { *f };
                    }
                    sum = sum + term;
                }
                sum.0
            }
        }
    }

    /// `J[a][mu] = d phi^a / d x^mu`.
    pub fn jacobian_at(&self, x: &[f64; 4]) -> [[f64; 4]; 4] {
        let mut j = [[0.0; 4]; 4];
        for mu in 0..4 {
            let d = self.directional(x, &Quaternion::basis(mu));
            for a in 0..4 {
                j[a][mu] = d[a];
            }
        }
        j
    }

    /// Samples the map on a domain with exact jets.
    pub fn sample(&self, domain: &Domain) -> Result<PhiField> {
        let field = match domain {
            Domain::S3Chart(res) => {
                let grid = s3_chart_grid(*res)?;
                SampledField::from_fn_with_jet(grid, 4, |x, v, j| {
                    let (u, du) = s3_chart_point(x[0], x[1], x[2]);
                    v.copy_from_slice(&self.value(&u.0));
                    for (axis, d) in du.iter().enumerate() {
                        j[axis * 4..axis * 4 + 4].copy_from_slice(&self.directional(&u.0, d));
                    }
                })
            }
            Domain::Box(grid) => {
                grid.require_rank(4)?;
                SampledField::from_fn_with_jet(grid.clone(), 4, |x, v, j| {
                    v.copy_from_slice(&self.value(x));
                    for mu in 0..4 {
                        j[mu * 4..mu * 4 + 4].copy_from_slice(&self.directional(x, &Quaternion::basis(mu)));
                    }
                })
            }
        };
        PhiField::new(field)
    }
}

impl PhiSampler for AnalyticPhi {
    fn eval(&self, x: &[f64; 4]) -> Option<[f64; 4]> {
        let v = self.value(x);
        v.iter().all(|c| c.is_finite()).then_some(v)
    }

    fn jacobian(&self, x: &[f64; 4]) -> Option<[[f64; 4]; 4]> {
        Some(self.jacobian_at(x))
    }
}

/// `phi = q^n` on the S^3 chart (unit norm) or on a 4-box.
pub fn quaternion_power_field(n: i32, domain: &Domain) -> Result<PhiField> {
    if n == 0 {
        return Err(Error::InvalidParameter("quaternion power must be nonzero".into()));
    }
    AnalyticPhi::Power { n }.sample(domain)
}

/// `phi = (q - c_1)(q - c_2)...` on a rank-4 box. Roots must lie inside the
/// box and be either identical (a multiple root) or separated by at least
/// four grid spacings.
pub fn quaternion_polynomial_field(roots: &[[f64; 4]], grid: &Grid) -> Result<(PhiField, AnalyticPhi)> {
    grid.require_rank(4)?;
    if roots.is_empty() {
        return Err(Error::InvalidParameter("polynomial needs at least one root".into()));
    }
    let sep = 4.0 * grid.max_spacing();
    for (i, a) in roots.iter().enumerate() {
        if !grid.contains(a) {
            return Err(Error::InvalidParameter(format!("root {i} lies outside the box")));
        }
        for b in &roots[i + 1..] {
            let d = (0..4).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();
            if d > 0.0 && d < sep {
                return Err(Error::InvalidParameter(format!("roots closer than {sep} (4 grid spacings)")));
            }
        }
    }
    let map = AnalyticPhi::Polynomial { roots: roots.to_vec() };
    Ok((map.sample(&Domain::Box(grid.clone()))?, map))
}

/// `phi = M (x - c)` on a rank-4 grid.
pub fn linear_phi_field(matrix: [[f64; 4]; 4], shift: [f64; 4], grid: &Grid) -> Result<(PhiField, AnalyticPhi)> {
    let det = det4(&matrix);
    if det.abs() < 1e-12 {
        return Err(Error::Singular(det));
    }
    let map = AnalyticPhi::Linear { matrix, shift };
    Ok((map.sample(&Domain::Box(grid.clone()))?, map))
}

pub const IDENTITY4: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];

/// Kinds of seeded random configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomKind {
    Spinor,
    Gauge,
    Su2,
}

#[derive(Debug, Clone)]
pub enum RandomField {
    Spinor(SpinorField),
    Gauge(GaugeField),
    Su2(Su2Field),
}

pub fn random_config(seed: u64, kind: RandomKind, grid: Grid) -> RandomField {
    match kind {
        RandomKind::Spinor => RandomField::Spinor(random_spinor(grid, seed)),
        RandomKind::Gauge => RandomField::Gauge(random_gauge(grid, seed)),
        RandomKind::Su2 => RandomField::Su2(random_su2(grid, seed)),
    }
}

/// `c + sum_j amp_j cos(k_j . x + p_j)` with analytic derivatives.
#[derive(Debug, Clone)]
struct TrigPoly {
    constant: f64,
    terms: Vec<([f64; MAX_RANK], f64, f64)>,
}

impl TrigPoly {
    fn random(rng: &mut ChaCha8Rng, grid: &Grid, constant: f64, amplitudes: &[f64]) -> Self {
        let rank = grid.rank();
        let terms = amplitudes
            .iter()
            .map(|&amp| {
                let mut k = [0.0; MAX_RANK];
                for (i, ki) in k.iter_mut().enumerate().take(rank) {
                    let ax = grid.axis(i);
                    let length = match ax.boundary {
                        Boundary::Periodic => ax.n as f64 * ax.spacing,
                        Boundary::Open if grid.is_cell_centered() => ax.n as f64 * ax.spacing,
                        Boundary::Open => (ax.n - 1) as f64 * ax.spacing,
                    };
                    // whole periods only where the axis wraps
                    let m = match ax.boundary {
                        Boundary::Periodic => rng.gen_range(-1..=1) as f64,
                        Boundary::Open => rng.gen_range(-1.0..=1.0),
                    };
                    *ki = 2.0 * PI * m / length;
                }
                (k, amp, rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        TrigPoly { constant, terms }
    }

    fn eval(&self, x: &[f64; MAX_RANK]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(k, a, p)| a * (k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + p).cos())
                .sum::<f64>()
    }

    fn grad(&self, x: &[f64; MAX_RANK]) -> [f64; MAX_RANK] {
        let mut g = [0.0; MAX_RANK];
        for (k, a, p) in &self.terms {
            let s = (k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + p).sin();
            for i in 0..MAX_RANK {
                g[i] -= a * s * k[i];
            }
        }
        g
    }

    fn hessian(&self, x: &[f64; MAX_RANK]) -> [[f64; MAX_RANK]; MAX_RANK] {
        let mut h = [[0.0; MAX_RANK]; MAX_RANK];
        for (k, a, p) in &self.terms {
            let c = (k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + p).cos();
            for i in 0..MAX_RANK {
                for j in 0..MAX_RANK {
                    h[i][j] -= a * c * k[i] * k[j];
                }
            }
        }
        h
    }
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Random spinor with `|psi| >= 0.5` everywhere and exact jets.
///
/// `psi1 = 1 + sum_j z_j cos(..)` with `sum |z_j| <= 0.5`; `psi2` is an
/// unconstrained band-limited sum; a constant random SU(2) rotation is applied
/// last, which preserves the norm bound.
pub fn random_spinor(grid: Grid, seed: u64) -> SpinorField {
    let mut rng = rng_for(seed, 1);
    let terms = 4;
    let amp = |rng: &mut ChaCha8Rng, total: f64| -> Vec<f64> { (0..terms).map(|_| rng.gen_range(0.0..total / terms as f64)).collect() };
    // each complex coefficient: real and imaginary trig polys sharing the bound
    let a1 = amp(&mut rng, 0.5 / std::f64::consts::SQRT_2);
    let b1 = amp(&mut rng, 0.5 / std::f64::consts::SQRT_2);
    let a2 = amp(&mut rng, 1.0);
    let b2 = amp(&mut rng, 1.0);
    let polys = [
        TrigPoly::random(&mut rng, &grid, 1.0, &a1),
        TrigPoly::random(&mut rng, &grid, 0.0, &b1),
        TrigPoly::random(&mut rng, &grid, 0.0, &a2),
        TrigPoly::random(&mut rng, &grid, 0.0, &b2),
    ];
    let rot = Su2Element::exp_algebra(&[rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)]);
    let rank = grid.rank();
    let field = SampledField::from_fn_with_jet(grid, 4, |x, v, j| {
        let raw: Vec<f64> = polys.iter().map(|p| p.eval(x)).collect();
        v.copy_from_slice(&rot.matrix().apply(&crate::su2::Spinor::from_reals(&raw)).to_reals());
        let grads: Vec<[f64; MAX_RANK]> = polys.iter().map(|p| p.grad(x)).collect();
        for mu in 0..rank {
            let d = [grads[0][mu], grads[1][mu], grads[2][mu], grads[3][mu]];
            j[mu * 4..mu * 4 + 4].copy_from_slice(&rot.matrix().apply(&crate::su2::Spinor::from_reals(&d)).to_reals());
        }
    });
    SpinorField::new(field).expect("four components")
}

/// Random smooth gauge potential with exact jets.
pub fn random_gauge(grid: Grid, seed: u64) -> GaugeField {
    let mut rng = rng_for(seed, 2);
    let rank = grid.rank();
    let polys: Vec<TrigPoly> = (0..3 * rank)
        .map(|_| {
            let c = rng.gen_range(-0.5..0.5);
            let amps: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.7..0.7)).collect();
            TrigPoly::random(&mut rng, &grid, c, &amps)
        })
        .collect();
    let nc = 3 * rank;
    let field = SampledField::from_fn_with_jet(grid, nc, |x, v, j| {
        for (c, p) in polys.iter().enumerate() {
            v[c] = p.eval(x);
            let g = p.grad(x);
            for nu in 0..rank {
                j[nu * nc + c] = g[nu];
            }
        }
    });
    GaugeField::new(field).expect("3 * rank components")
}

/// Random SU(2) field `S = exp(f_1 T_1) exp(f_2 T_2) exp(f_3 T_3)` with exact
/// first and second derivatives.
pub fn random_su2(grid: Grid, seed: u64) -> Su2Field {
    let mut rng = rng_for(seed, 3);
    let polys: Vec<TrigPoly> = (0..3)
        .map(|_| {
            let c = rng.gen_range(-PI..PI);
            let amps: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            TrigPoly::random(&mut rng, &grid, c, &amps)
        })
        .collect();
    let rank = grid.rank();
    let g = grid.clone();
    Su2Field::from_site_fn(grid, move |site| {
        let x = g.coord(site);
        // factor values, first and second derivatives
        let mut e = Vec::with_capacity(3);
        let mut de = Vec::with_capacity(3);
        let mut dde = Vec::with_capacity(3);
        for (a, p) in polys.iter().enumerate() {
            let f = p.eval(&x);
            let gr = p.grad(&x);
            let he = p.hessian(&x);
            let t = generator(a);
            let ea = *Su2Element::exp_algebra(&{
                let mut v = [0.0; 3];
                v[a] = f;
                v
            })
            .matrix();
            let te = t * ea;
            let tte = t * te;
            de.push((0..rank).map(|mu| te.scale_re(gr[mu])).collect::<Vec<_>>());
            let mut dd = vec![Matrix2C::zero(); pair_count(rank)];
            for mu in 0..rank {
                for nu in mu..rank {
                    dd[pair_index(rank, mu, nu)] = te.scale_re(he[mu][nu]) + tte.scale_re(gr[mu] * gr[nu]);
                }
            }
            dde.push(dd);
            e.push(ea);
        }
        let prod = |f: &dyn Fn(usize) -> Matrix2C| f(0) * f(1) * f(2);
        let value = prod(&|i| e[i]);
        let d: Vec<Matrix2C> = (0..rank)
            .map(|mu| {
                (0..3).fold(Matrix2C::zero(), |acc, i| acc + prod(&|k| if k == i { de[i][mu] } else { e[k] }))
            })
            .collect();
        let mut dd = vec![Matrix2C::zero(); pair_count(rank)];
        for mu in 0..rank {
            for nu in mu..rank {
                let mut acc = Matrix2C::zero();
                for i in 0..3 {
                    for k in 0..3 {
                        acc += if i == k {
                            prod(&|l| if l == i { dde[i][pair_index(rank, mu, nu)] } else { e[l] })
                        } else {
                            prod(&|l| {
                                if l == i {
                                    de[i][mu]
                                } else if l == k {
                                    de[k][nu]
                                } else {
                                    e[l]
                                }
                            })
                        };
                    }
                }
                dd[pair_index(rank, mu, nu)] = acc;
            }
        }
        (value, d, dd)
    })
    .expect("products of exponentials are SU(2)")
}
