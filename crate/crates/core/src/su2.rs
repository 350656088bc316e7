//! Pauli matrices, 2x2 complex matrices, spinors and SU(2) elements.
//!
//! Generators follow the anti-Hermitian convention `T_a = sigma_a / (2i)`, so a
//! gauge potential with real components `A^a` has matrix form `A^a T_a`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used by the matrix predicates.
pub const PREDICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Matrix2C(pub [[C64; 2]; 2]);

impl Matrix2C {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Matrix2C([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Matrix2C([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Matrix2C([[ONE, ZERO], [ZERO, ONE]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Matrix2C([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Matrix2C([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() < PREDICATE_TOL
    }

    pub fn is_anti_hermitian(&self) -> bool {
        (*self + self.adjoint()).max_abs() < PREDICATE_TOL
    }

    pub fn is_traceless(&self) -> bool {
        self.trace().norm() < PREDICATE_TOL
    }

    pub fn unitarity_residual(&self) -> f64 {
        (self.adjoint() * *self - Matrix2C::identity()).max_abs()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_residual() < PREDICATE_TOL
    }

    /// Projection onto the anti-Hermitian traceless part, with the size of the
    /// discarded remainder.
    pub fn project_su2_algebra(&self) -> (Self, f64) {
        let ah = (*self - self.adjoint()).scale_re(0.5);
        let tr = ah.trace() * 0.5;
        let p = ah - Matrix2C::identity().scale(tr);
        let residual = (*self - p).max_abs();
        (p, residual)
    }

    /// Real components `X^a` of an algebra element `X = X^a T_a`, using
    /// `X^a = i Tr(X sigma_a)`. Returns the components and the largest
    /// imaginary residue.
    pub fn algebra_components(&self) -> ([f64; 3], f64) {
        let mut out = [0.0; 3];
        let mut residue: f64 = 0.0;
        for (a, o) in out.iter_mut().enumerate() {
            let z = I * (*self * pauli(a)).trace();
            *o = z.re;
            residue = residue.max(z.im.abs());
        }
        (out, residue)
    }

    /// `X^a T_a` for real components.
    pub fn from_algebra(components: &[f64; 3]) -> Self {
        let mut m = Matrix2C::zero();
        for (a, c) in components.iter().enumerate() {
            m += generator(a).scale_re(*c);
        }
        m
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        let m = &self.0;
        Spinor([m[0][0] * v.0[0] + m[0][1] * v.0[1], m[1][0] * v.0[0] + m[1][1] * v.0[1]])
    }
}

impl Add for Matrix2C {
    type Output = Matrix2C;
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        Matrix2C([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl AddAssign for Matrix2C {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Matrix2C {
    type Output = Matrix2C;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Matrix2C {
    type Output = Matrix2C;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for Matrix2C {
    type Output = Matrix2C;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Matrix2C(out)
    }
}

/// Pauli matrix `sigma_{a+1}` for `a` in `0..3`.
pub fn pauli(a: usize) -> Matrix2C {
    match a {
        0 => Matrix2C::new(ZERO, ONE, ONE, ZERO),
        1 => Matrix2C::new(ZERO, -I, I, ZERO),
        2 => Matrix2C::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli index {a} out of range"),
    }
}

/// Generator `T_a = sigma_a / (2i)`.
pub fn generator(a: usize) -> Matrix2C {
    pauli(a).scale(C64::new(0.0, -0.5))
}

/// Totally antisymmetric symbol on three indices.
pub fn epsilon3(a: usize, b: usize, c: usize) -> f64 {
    if a == b || b == c || a == c {
        return 0.0;
    }
    // cyclic permutations of (0,1,2) are even
    if (a + 1) % 3 == b && (b + 1) % 3 == c {
        1.0
    } else {
        -1.0
    }
}

/// Clifford decomposition `X = s I + v_a sigma_a` with `s = Tr(X)/2` and
/// `v_a = Tr(X sigma_a)/2`.
pub fn clifford_decompose(x: &Matrix2C, require_hermitian: bool) -> Result<(C64, [C64; 3])> {
    if require_hermitian {
        let r = x.hermiticity_residual();
        if r >= PREDICATE_TOL {
            return Err(Error::NotHermitian(r));
        }
    }
    let s = x.trace() * 0.5;
    let v = [0, 1, 2].map(|a| (*x * pauli(a)).trace() * 0.5);
    Ok((s, v))
}

/// Reassembles `s I + v_a sigma_a`.
pub fn clifford_compose(s: C64, v: &[C64; 3]) -> Matrix2C {
    let mut m = Matrix2C::identity().scale(s);
    for (a, va) in v.iter().enumerate() {
        m += pauli(a).scale(*va);
    }
    m
}

/// Two-component complex spinor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Spinor(pub [C64; 2]);

impl Spinor {
    pub fn new(a: C64, b: C64) -> Self {
        Spinor([a, b])
    }

    /// Packs `(Re psi1, Im psi1, Re psi2, Im psi2)`.
    pub fn from_reals(r: &[f64]) -> Self {
        Spinor([C64::new(r[0], r[1]), C64::new(r[2], r[3])])
    }

    pub fn to_reals(&self) -> [f64; 4] {
        [self.0[0].re, self.0[0].im, self.0[1].re, self.0[1].im]
    }

    /// Hermitian product `self^dagger other`.
    #[inline]
    pub fn dot(&self, other: &Spinor) -> C64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn scale(&self, s: C64) -> Self {
        Spinor([self.0[0] * s, self.0[1] * s])
    }

    /// Outer product `self other^dagger`.
    pub fn outer(&self, other: &Spinor) -> Matrix2C {
        let (a, b) = (&self.0, &other.0);
        Matrix2C([[a[0] * b[0].conj(), a[0] * b[1].conj()], [a[1] * b[0].conj(), a[1] * b[1].conj()]])
    }

    pub fn max_abs(&self) -> f64 {
        self.0[0].norm().max(self.0[1].norm())
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, o: Self) -> Self {
        Spinor([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, o: Self) -> Self {
        Spinor([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

/// An element of SU(2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Element(Matrix2C);

impl Su2Element {
    pub fn new(m: Matrix2C) -> Result<Self> {
        let unitarity = m.unitarity_residual();
        let det = (m.det() - ONE).norm();
        if unitarity >= PREDICATE_TOL || det >= PREDICATE_TOL {
            return Err(Error::NotSu2 { site: 0, unitarity, det });
        }
        Ok(Su2Element(m))
    }

    pub fn identity() -> Self {
        Su2Element(Matrix2C::identity())
    }

    /// `exp(X)` for `X = x^a T_a`.
    pub fn exp_algebra(x: &[f64; 3]) -> Self {
        let theta = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if theta == 0.0 {
            return Su2Element::identity();
        }
        // X = -(i/2) theta nhat.sigma, X^2 = -(theta/2)^2 I
        let half = 0.5 * theta;
        let m = Matrix2C::identity().scale_re(half.cos()) + Matrix2C::from_algebra(x).scale_re(half.sin() / half);
        Su2Element(m)
    }

    pub fn matrix(&self) -> &Matrix2C {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Su2Element(self.0.adjoint())
    }
}

impl Mul for Su2Element {
    type Output = Su2Element;
    fn mul(self, o: Self) -> Self {
        Su2Element(self.0 * o.0)
    }
}

/// Runs the anticommutator and Pauli element identities, returning the largest
/// residual found. Used by tests and by the debug-build self check.
pub fn identity_residuals() -> PauliIdentityReport {
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut anti: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let lhs = pauli(a) * pauli(b) + pauli(b) * pauli(a);
            let rhs = Matrix2C::identity().scale_re(2.0 * delta(a, b));
            anti = anti.max((lhs - rhs).max_abs());
        }
    }
    let mut pair: f64 = 0.0;
    for al in 0..2 {
        for be in 0..2 {
            for al2 in 0..2 {
                for be2 in 0..2 {
                    let lhs: C64 = (0..3).map(|a| pauli(a).get(al, be) * pauli(a).get(al2, be2)).sum();
                    let rhs = 2.0 * delta(al, be2) * delta(al2, be) - delta(al, be) * delta(al2, be2);
                    pair = pair.max((lhs - rhs).norm());
                }
            }
        }
    }
    let mut triple: f64 = 0.0;
    for idx in 0..64usize {
        let i: Vec<usize> = (0..6).map(|k| (idx >> k) & 1).collect();
        let (al, be, al1, be1, al2, be2) = (i[0], i[1], i[2], i[3], i[4], i[5]);
        let mut lhs = ZERO;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let e = epsilon3(a, b, c);
                    if e != 0.0 {
                        lhs += pauli(a).get(al, be) * pauli(b).get(al1, be1) * pauli(c).get(al2, be2) * e;
                    }
                }
            }
        }
        let rhs = C64::new(0.0, -2.0)
            * (delta(al, be1) * delta(al1, be2) * delta(al2, be) - delta(al, be2) * delta(al2, be1) * delta(al1, be));
        triple = triple.max((lhs - rhs).norm());
    }
    PauliIdentityReport { anticommutator: anti, pair_elements: pair, triple_elements: triple }
}

#[derive(Debug, Clone, Copy)]
pub struct PauliIdentityReport {
    pub anticommutator: f64,
    pub pair_elements: f64,
    pub triple_elements: f64,
}

impl PauliIdentityReport {
    pub fn max(&self) -> f64 {
        self.anticommutator.max(self.pair_elements).max(self.triple_elements)
    }
}

/// Debug-build guard against convention drift; a no-op in release builds.
pub fn debug_self_check() {
    #[cfg(debug_assertions)]
    {
        use std::sync::Once;
        static CHECK: Once = Once::new();
        CHECK.call_once(|| {
            let r = identity_residuals();
            assert!(r.max() < 1e-15, "Pauli identities violated: {r:?}");
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_identities_hold() {
        let r = identity_residuals();
        assert!(r.anticommutator < 1e-15);
        assert!(r.pair_elements < 1e-15);
        assert!(r.triple_elements < 1e-15);
    }

    #[test]
    fn sigma2_carries_exact_imaginary_unit() {
        assert_eq!(pauli(1).get(0, 1), c(0.0, -1.0));
        assert_eq!(pauli(1).get(1, 0), c(0.0, 1.0));
    }

    #[test]
    fn generators_anti_hermitian_traceless() {
        for a in 0..3 {
            assert!(generator(a).is_anti_hermitian());
            assert!(generator(a).is_traceless());
        }
        // [T_a, T_b] = eps_abc T_c
        let comm = generator(0).commutator(&generator(1));
        assert!((comm - generator(2)).max_abs() < 1e-15);
    }

    #[test]
    fn clifford_identity_and_basis() {
        let (s, v) = clifford_decompose(&Matrix2C::identity(), true).unwrap();
        assert_eq!(s, ONE);
        assert!(v.iter().all(|z| z.norm() == 0.0));
        let (s, v) = clifford_decompose(&pauli(2), true).unwrap();
        assert_eq!(s, ZERO);
        assert_eq!(v, [ZERO, ZERO, ONE]);
    }

    #[test]
    fn clifford_random_hermitian_reassembles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let d0: f64 = rng.gen_range(-3.0..3.0);
            let d1: f64 = rng.gen_range(-3.0..3.0);
            let off = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let x = Matrix2C::new(c(d0, 0.0), off, off.conj(), c(d1, 0.0));
            let (s, v) = clifford_decompose(&x, true).unwrap();
            assert!((clifford_compose(s, &v) - x).max_abs() < 1e-14);
            assert!(s.im.abs() < 1e-15 && v.iter().all(|z| z.im.abs() < 1e-15));
        }
    }

    #[test]
    fn clifford_rejects_non_hermitian_when_asked() {
        let x = Matrix2C::new(ONE, ONE, ZERO, ONE);
        assert!(matches!(clifford_decompose(&x, true), Err(Error::NotHermitian(_))));
        assert!(clifford_decompose(&x, false).is_ok());
    }

    #[test]
    fn algebra_components_round_trip() {
        let x = [0.3, -1.2, 2.5];
        let m = Matrix2C::from_algebra(&x);
        let (back, residue) = m.algebra_components();
        for a in 0..3 {
            assert!((back[a] - x[a]).abs() < 1e-15);
        }
        assert!(residue < 1e-15);
    }

    #[test]
    fn su2_closure_under_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: [f64; 3] = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let y: [f64; 3] = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let p = Su2Element::exp_algebra(&x) * Su2Element::exp_algebra(&y);
            assert!(Su2Element::new(*p.matrix()).is_ok());
        }
        assert!(Su2Element::new(Matrix2C::identity().scale_re(2.0)).is_err());
    }

    #[test]
    fn exp_matches_series() {
        let x = [0.4, -0.1, 0.7];
        let m = Matrix2C::from_algebra(&x);
        let mut term = Matrix2C::identity();
        let mut sum = Matrix2C::identity();
        for k in 1..30 {
            term = (term * m).scale_re(1.0 / k as f64);
            sum += term;
        }
        assert!((sum - *Su2Element::exp_algebra(&x).matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn projection_keeps_algebra_elements() {
        let m = Matrix2C::from_algebra(&[1.0, 2.0, -0.5]);
        let (p, r) = m.project_su2_algebra();
        assert!(r < 1e-15 && (p - m).max_abs() < 1e-15);
        let (p, r) = (m + Matrix2C::identity()).project_su2_algebra();
        assert!((r - 1.0).abs() < 1e-15 && p.is_traceless());
    }
}
