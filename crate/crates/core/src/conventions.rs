//! Orientation and Levi-Civita conventions shared by every density.
//!
//! Axis order is the grid axis order with `eps^{0123} = +1` (rank 4) and
//! `eps^{012} = +1` (rank 3). On the S^3 chart the axes are `(chi, theta,
//! phi)`. A global sign is applied on top of this; its value is fixed by
//! requiring the identity map of S^3 to carry knot charge +1.

use serde::Serialize;

/// All permutations of `0..n` paired with their signs.
pub fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<(Vec<usize>, f64)>) {
        if prefix.len() == n {
            out.push((prefix.clone(), permutation_sign(prefix)));
            return;
        }
        for k in 0..n {
            if !prefix.contains(&k) {
                prefix.push(k);
                rec(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), n, &mut out);
    out
}

/// Sign of a permutation by counting inversions.
pub fn permutation_sign(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The 24 signed permutations of four indices, computed once.
pub fn perms4() -> &'static [([usize; 4], f64)] {
    use std::sync::OnceLock;
    static P: OnceLock<Vec<([usize; 4], f64)>> = OnceLock::new();
    P.get_or_init(|| {
        signed_permutations(4)
            .into_iter()
            .map(|(p, s)| ([p[0], p[1], p[2], p[3]], s))
            .collect()
    })
}

pub const PERMS3: [([usize; 3], f64); 6] = [
    ([0, 1, 2], 1.0),
    ([1, 2, 0], 1.0),
    ([2, 0, 1], 1.0),
    ([0, 2, 1], -1.0),
    ([2, 1, 0], -1.0),
    ([1, 0, 2], -1.0),
];

/// Determinant of a 4x4 matrix by its Laplace expansion over 2x2 minors.
pub fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let s0 = m[0][0] * m[1][1] - m[1][0] * m[0][1];
    let s1 = m[0][0] * m[1][2] - m[1][0] * m[0][2];
    let s2 = m[0][0] * m[1][3] - m[1][0] * m[0][3];
    let s3 = m[0][1] * m[1][2] - m[1][1] * m[0][2];
    let s4 = m[0][1] * m[1][3] - m[1][1] * m[0][3];
    let s5 = m[0][2] * m[1][3] - m[1][2] * m[0][3];
    let c5 = m[2][2] * m[3][3] - m[3][2] * m[2][3];
    let c4 = m[2][1] * m[3][3] - m[3][1] * m[2][3];
    let c3 = m[2][1] * m[3][2] - m[3][1] * m[2][2];
    let c2 = m[2][0] * m[3][3] - m[3][0] * m[2][3];
    let c1 = m[2][0] * m[3][2] - m[3][0] * m[2][2];
    let c0 = m[2][0] * m[3][1] - m[3][0] * m[2][1];
    s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0
}

/// Global orientation sign applied to Chern-Simons and Chern densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Orientation {
    pub sign: f64,
}

impl Default for Orientation {
    fn default() -> Self {
        Orientation { sign: 1.0 }
    }
}

impl Orientation {
    pub fn new(sign: f64) -> Self {
        Orientation { sign: if sign < 0.0 { -1.0 } else { 1.0 } }
    }

    /// Picks the sign that makes a measured raw charge of the calibration
    /// configuration positive.
    pub fn calibrated(raw_identity_charge: f64) -> Self {
        Orientation::new(raw_identity_charge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_tables() {
        let p = perms4();
        assert_eq!(p.len(), 24);
        assert_eq!(p.iter().map(|(_, s)| s).sum::<f64>(), 0.0);
        for (perm, sign) in PERMS3 {
            assert_eq!(permutation_sign(&perm), sign);
        }
    }

    #[test]
    fn det4_matches_leibniz() {
        let m = [[2.0, -1.0, 0.5, 3.0], [0.0, 1.5, -2.0, 1.0], [4.0, 0.3, 1.0, -1.0], [1.0, 2.0, 0.0, 0.7]];
        let leibniz: f64 = perms4()
            .iter()
            .map(|(p, s)| s * m[0][p[0]] * m[1][p[1]] * m[2][p[2]] * m[3][p[3]])
            .sum();
        assert!((det4(&m) - leibniz).abs() < 1e-12);
    }
}
