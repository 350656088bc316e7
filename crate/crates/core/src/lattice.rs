//! Rectangular grids in three and four dimensions, sampled fields on them,
//! finite-difference derivatives and quadrature.
//!
//! Sites are stored site-major with the last axis varying fastest. A sampled
//! field holds `ncomp` reals per site, optionally followed by a first-derivative
//! jet laid out axis-major (`jet[(axis * len + site) * ncomp + comp]`).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Maximum supported grid rank.
pub const MAX_RANK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub n: usize,
    pub origin: f64,
    pub spacing: f64,
    pub boundary: Boundary,
}

impl Axis {
    pub fn open(n: usize, origin: f64, spacing: f64) -> Self {
        Axis { n, origin, spacing, boundary: Boundary::Open }
    }

    pub fn periodic(n: usize, origin: f64, spacing: f64) -> Self {
        Axis { n, origin, spacing, boundary: Boundary::Periodic }
    }
}

/// Finite-difference stencil order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    #[default]
    Second,
    /// Fourth-order interior stencil; falls back to second order within two
    /// sites of an open boundary.
    Fourth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    axes: Vec<Axis>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    len: usize,
    cell_centered: bool,
    orientation: f64,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let rank = axes.len();
        if !(3..=MAX_RANK).contains(&rank) {
            return Err(Error::InvalidGrid(format!("rank must be 3 or 4, got {rank}")));
        }
        for (i, ax) in axes.iter().enumerate() {
            if ax.n < 4 {
                return Err(Error::InvalidGrid(format!("axis {i} has {} points, need at least 4", ax.n)));
            }
            if !(ax.spacing > 0.0) || !ax.spacing.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {i} spacing must be positive")));
            }
            if !ax.origin.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {i} origin must be finite")));
            }
        }
        let mut strides = vec![1; rank];
        for i in (0..rank - 1).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].n;
        }
        let len = axes.iter().map(|a| a.n).product();
        Ok(Grid { axes, strides, len, cell_centered: false, orientation: 1.0 })
    }

    /// Node-centered open box `[lo, hi]` on every axis with `n` points per axis.
    pub fn open_box(rank: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidGrid("box needs hi > lo and n >= 2".into()));
        }
        let h = (hi - lo) / (n - 1) as f64;
        Grid::new(vec![Axis::open(n, lo, h); rank])
    }

    /// Sites sit at `o + (k + 1/2) h` instead of `o + k h`.
    pub fn cell_centered(mut self, flag: bool) -> Self {
        self.cell_centered = flag;
        self
    }

    pub fn with_orientation(mut self, orientation: f64) -> Self {
        self.orientation = if orientation < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_cell_centered(&self) -> bool {
        self.cell_centered
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn max_spacing(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).fold(0.0, f64::max)
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.rank() {
            return Err(Error::AxisOutOfRange { axis, rank: self.rank() });
        }
        Ok(())
    }

    pub fn require_rank(&self, rank: usize) -> Result<()> {
        if self.rank() != rank {
            return Err(Error::RankMismatch { expected: rank, found: self.rank() });
        }
        Ok(())
    }

    pub fn index(&self, k: &[usize]) -> usize {
        k.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    pub fn multi_index(&self, site: usize) -> [usize; MAX_RANK] {
        let mut out = [0; MAX_RANK];
        for (i, (ax, s)) in self.axes.iter().zip(&self.strides).enumerate() {
            out[i] = (site / s) % ax.n;
        }
        out
    }

    #[inline]
    pub fn coordinate(&self, axis: usize, k: usize) -> f64 {
        let ax = &self.axes[axis];
        let shift = if self.cell_centered { 0.5 } else { 0.0 };
        ax.origin + (k as f64 + shift) * ax.spacing
    }

    /// Coordinates of a site; unused trailing entries are zero.
    pub fn coord(&self, site: usize) -> [f64; MAX_RANK] {
        let k = self.multi_index(site);
        let mut x = [0.0; MAX_RANK];
        for (i, xi) in x.iter_mut().enumerate().take(self.rank()) {
            *xi = self.coordinate(i, k[i]);
        }
        x
    }

    /// Quadrature weight of index `k` along `axis`: trapezoidal on node-centered
    /// open axes, plain `h` on periodic or cell-centered axes.
    pub fn weight(&self, axis: usize, k: usize) -> f64 {
        let ax = &self.axes[axis];
        match ax.boundary {
            Boundary::Open if !self.cell_centered && (k == 0 || k == ax.n - 1) => 0.5 * ax.spacing,
            _ => ax.spacing,
        }
    }

    pub fn site_weight(&self, site: usize) -> f64 {
        let k = self.multi_index(site);
        (0..self.rank()).map(|i| self.weight(i, k[i])).product()
    }

    /// Total measure covered by the quadrature weights.
    pub fn volume(&self) -> f64 {
        (0..self.rank())
            .map(|i| (0..self.axes[i].n).map(|k| self.weight(i, k)).sum::<f64>())
            .product()
    }

    /// Same axes and layout (orientation and centering included).
    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }

    /// Continuous fractional index along an axis, wrapped on periodic axes.
    fn fractional_index(&self, axis: usize, x: f64) -> Option<f64> {
        let ax = &self.axes[axis];
        let shift = if self.cell_centered { 0.5 } else { 0.0 };
        let t = (x - ax.origin) / ax.spacing - shift;
        let n = ax.n as f64;
        match ax.boundary {
            Boundary::Periodic => Some(t.rem_euclid(n)),
            Boundary::Open => {
                let tol = 1e-9;
                if t < -tol || t > n - 1.0 + tol {
                    None
                } else {
                    Some(t.clamp(0.0, n - 1.0))
                }
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.rank()).all(|i| self.fractional_index(i, x[i]).is_some())
    }
}

/// Real samples with `ncomp` components per site and an optional exact
/// first-derivative jet.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: Grid,
    ncomp: usize,
    values: Vec<f64>,
    jet: Option<Vec<f64>>,
}

impl SampledField {
    pub fn new(grid: Grid, ncomp: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * ncomp {
            return Err(Error::ComponentMismatch { expected: grid.len() * ncomp, found: values.len() });
        }
        Ok(SampledField { grid, ncomp, values, jet: None })
    }

    pub fn zeros(grid: Grid, ncomp: usize) -> Self {
        let n = grid.len() * ncomp;
        SampledField { grid, ncomp, values: vec![0.0; n], jet: None }
    }

    /// Evaluates `f(coords, out)` at every site in parallel.
    pub fn from_fn<F>(grid: Grid, ncomp: usize, f: F) -> Self
    where
        F: Fn(&[f64; MAX_RANK], &mut [f64]) + Sync,
    {
        let g = grid.clone();
        Self::from_site_fn(grid, ncomp, |site, out| f(&g.coord(site), out))
    }

    /// Evaluates `f(site, out)` at every site in parallel.
    pub fn from_site_fn<F>(grid: Grid, ncomp: usize, f: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let mut values = vec![0.0; grid.len() * ncomp];
        values.par_chunks_mut(ncomp).enumerate().for_each(|(site, out)| f(site, out));
        SampledField { grid, ncomp, values, jet: None }
    }

    /// Evaluates values and jet together: `f(coords, value_out, jet_out)` where
    /// `jet_out[axis * ncomp + comp]`.
    pub fn from_fn_with_jet<F>(grid: Grid, ncomp: usize, f: F) -> Self
    where
        F: Fn(&[f64; MAX_RANK], &mut [f64], &mut [f64]) + Sync,
    {
        let g = grid.clone();
        Self::from_site_fn_with_jet(grid, ncomp, |site, v, j| f(&g.coord(site), v, j))
    }

    /// Site-indexed variant of [`SampledField::from_fn_with_jet`].
    pub fn from_site_fn_with_jet<F>(grid: Grid, ncomp: usize, f: F) -> Self
    where
        F: Fn(usize, &mut [f64], &mut [f64]) + Sync,
    {
        let rank = grid.rank();
        let len = grid.len();
        let width = ncomp * (rank + 1);
        let mut packed = vec![0.0; len * width];
        packed.par_chunks_mut(width).enumerate().for_each(|(site, out)| {
            let (v, j) = out.split_at_mut(ncomp);
            f(site, v, j);
        });
        let mut values = vec![0.0; len * ncomp];
        let mut jet = vec![0.0; len * ncomp * rank];
        for site in 0..len {
            let chunk = &packed[site * width..(site + 1) * width];
            values[site * ncomp..(site + 1) * ncomp].copy_from_slice(&chunk[..ncomp]);
            for axis in 0..rank {
                let dst = (axis * len + site) * ncomp;
                jet[dst..dst + ncomp].copy_from_slice(&chunk[ncomp * (1 + axis)..ncomp * (2 + axis)]);
            }
        }
        SampledField { grid, ncomp, values, jet: Some(jet) }
    }

    pub fn with_jet(mut self, jet: Vec<f64>) -> Result<Self> {
        let expected = self.values.len() * self.grid.rank();
        if jet.len() != expected {
            return Err(Error::ComponentMismatch { expected, found: jet.len() });
        }
        self.jet = Some(jet);
        Ok(self)
    }

    pub fn without_jet(mut self) -> Self {
        self.jet = None;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn jet(&self) -> Option<&[f64]> {
        self.jet.as_deref()
    }

    pub fn has_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn into_parts(self) -> (Grid, usize, Vec<f64>, Option<Vec<f64>>) {
        (self.grid, self.ncomp, self.values, self.jet)
    }

    #[inline]
    pub fn site(&self, site: usize) -> &[f64] {
        &self.values[site * self.ncomp..(site + 1) * self.ncomp]
    }

    /// Jet samples of one axis at one site, if a jet is present.
    #[inline]
    pub fn jet_at(&self, axis: usize, site: usize) -> Option<&[f64]> {
        let len = self.grid.len();
        self.jet
            .as_ref()
            .map(|j| &j[(axis * len + site) * self.ncomp..(axis * len + site + 1) * self.ncomp])
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite { site: i / self.ncomp }),
            None => Ok(()),
        }
    }

    /// Per-axis derivative samples: the jet when present, else central
    /// differences.
    pub fn gradient(&self) -> Result<Gradient> {
        let len = self.grid.len();
        let rank = self.grid.rank();
        let axes = match &self.jet {
            Some(j) => (0..rank)
                .map(|a| j[a * len * self.ncomp..(a + 1) * len * self.ncomp].to_vec())
                .collect(),
            None => (0..rank)
                .map(|a| central_diff(self, a).map(|f| f.values))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Gradient { ncomp: self.ncomp, axes, exact: self.jet.is_some() })
    }

    /// Multilinear interpolation of all components at a point.
    pub fn interpolate(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let rank = self.grid.rank();
        let mut base = [0usize; MAX_RANK];
        let mut frac = [0.0; MAX_RANK];
        for i in 0..rank {
            let t = self.grid.fractional_index(i, x[i]).ok_or(Error::OutsideDomain)?;
            let ax = self.grid.axis(i);
            let (k, f) = match ax.boundary {
                Boundary::Periodic => ((t.floor() as usize) % ax.n, t - t.floor()),
                Boundary::Open => {
                    let k = (t.floor() as usize).min(ax.n - 2);
                    (k, t - k as f64)
                }
            };
            base[i] = k;
            frac[i] = f;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for corner in 0..(1usize << rank) {
            let mut w = 1.0;
            let mut site = 0;
            for i in 0..rank {
                let ax = self.grid.axis(i);
                let bit = (corner >> i) & 1;
                let k = if bit == 1 { (base[i] + 1) % ax.n } else { base[i] };
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                site += k * self.grid.stride(i);
            }
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(self.site(site)) {
                    *o += w * v;
                }
            }
        }
        Ok(())
    }
}

/// Derivative samples of a field along every axis.
#[derive(Debug, Clone)]
pub struct Gradient {
    ncomp: usize,
    axes: Vec<Vec<f64>>,
    exact: bool,
}

impl Gradient {
    #[inline]
    pub fn at(&self, axis: usize, site: usize) -> &[f64] {
        &self.axes[axis][site * self.ncomp..(site + 1) * self.ncomp]
    }

    /// True when the samples came from an exact jet.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }
}

/// Real scalar samples, one per site.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(SampledField);

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        SampledField::new(grid, 1, values).map(ScalarField)
    }

    pub fn from_sampled(field: SampledField) -> Result<Self> {
        if field.ncomp != 1 {
            return Err(Error::ComponentMismatch { expected: 1, found: field.ncomp });
        }
        Ok(ScalarField(field))
    }

    pub fn grid(&self) -> &Grid {
        self.0.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn as_sampled(&self) -> &SampledField {
        &self.0
    }

    pub fn into_sampled(self) -> SampledField {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Site exclusion mask used to drop neighbourhoods of zeros from quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    excluded: Vec<bool>,
}

impl Mask {
    pub fn none(grid: &Grid) -> Self {
        Mask { excluded: vec![false; grid.len()] }
    }

    /// Excludes every site within `radius` of one of the `centers`.
    pub fn balls(grid: &Grid, centers: &[[f64; MAX_RANK]], radius: f64) -> Self {
        let rank = grid.rank();
        let excluded = (0..grid.len())
            .into_par_iter()
            .map(|site| {
                let x = grid.coord(site);
                centers.iter().any(|c| {
                    (0..rank).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>().sqrt() <= radius
                })
            })
            .collect();
        Mask { excluded }
    }

    pub fn is_excluded(&self, site: usize) -> bool {
        self.excluded[site]
    }

    pub fn count(&self) -> usize {
        self.excluded.iter().filter(|e| **e).count()
    }

    /// Quadrature measure of the excluded sites.
    pub fn excluded_volume(&self, grid: &Grid) -> f64 {
        let mut acc = Accumulator::default();
        for (site, _) in self.excluded.iter().enumerate().filter(|(_, e)| **e) {
            acc.add(grid.site_weight(site));
        }
        acc.total()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Second-order central difference along `axis`.
pub fn central_diff(field: &SampledField, axis: usize) -> Result<SampledField> {
    central_diff_with(field, axis, Stencil::Second)
}

pub fn central_diff_with(field: &SampledField, axis: usize, stencil: Stencil) -> Result<SampledField> {
    let grid = field.grid();
    grid.check_axis(axis)?;
    let ax = *grid.axis(axis);
    let stride = grid.stride(axis);
    let n = ax.n;
    let h = ax.spacing;
    let nc = field.ncomp;
    let src = &field.values;
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(nc).enumerate().for_each(|(site, dst)| {
        let k = (site / stride) % n;
        let base = site - k * stride;
        let at = |j: isize, c: usize| -> f64 {
            let kk = match ax.boundary {
                Boundary::Periodic => (k as isize + j).rem_euclid(n as isize) as usize,
                Boundary::Open => (k as isize + j) as usize,
            };
            src[(base + kk * stride) * nc + c]
        };
        let periodic = ax.boundary == Boundary::Periodic;
        let fourth = stencil == Stencil::Fourth && (periodic || (k >= 2 && k + 2 < n));
        for (c, d) in dst.iter_mut().enumerate() {
            *d = if fourth {
                (-at(2, c) + 8.0 * at(1, c) - 8.0 * at(-1, c) + at(-2, c)) / (12.0 * h)
            } else if periodic || (k > 0 && k + 1 < n) {
                (at(1, c) - at(-1, c)) / (2.0 * h)
            } else if k == 0 {
                (-3.0 * at(0, c) + 4.0 * at(1, c) - at(2, c)) / (2.0 * h)
            } else {
                (3.0 * at(0, c) - 4.0 * at(-1, c) + at(-2, c)) / (2.0 * h)
            };
        }
    });
    Ok(SampledField { grid: grid.clone(), ncomp: nc, values: out, jet: None })
}

/// Quadrature of a scalar density over the grid, multiplied by the grid
/// orientation.
pub fn integrate(density: &ScalarField) -> Result<f64> {
    integrate_masked(density, None)
}

/// As [`integrate`], with masked sites given zero weight.
pub fn integrate_masked(density: &ScalarField, mask: Option<&Mask>) -> Result<f64> {
    density.0.check_finite()?;
    let grid = density.grid();
    let mut acc = Accumulator::default();
    for (site, v) in density.values().iter().enumerate() {
        if mask.is_some_and(|m| m.is_excluded(site)) {
            continue;
        }
        acc.add(v * grid.site_weight(site));
    }
    Ok(grid.orientation() * acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic_line(n: usize) -> Grid {
        let h = 2.0 * PI / n as f64;
        Grid::new(vec![Axis::periodic(n, 0.0, h), Axis::periodic(4, 0.0, 1.0), Axis::periodic(4, 0.0, 1.0)]).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![Axis::open(3, 0.0, 1.0); 3]).is_err());
        assert!(Grid::new(vec![Axis::open(5, 0.0, 0.0); 3]).is_err());
        assert!(Grid::new(vec![Axis::open(5, 0.0, 1.0); 2]).is_err());
        let g = Grid::new(vec![Axis::open(5, 0.0, 1.0), Axis::open(6, 0.0, 1.0), Axis::open(7, 0.0, 1.0)]).unwrap();
        assert_eq!(g.len(), 5 * 6 * 7);
        assert!(central_diff(&SampledField::zeros(g, 1), 3).is_err());
    }

    #[test]
    fn index_round_trip_and_coordinates() {
        let g = Grid::new(vec![Axis::open(4, -1.0, 0.5), Axis::open(5, 0.0, 1.0), Axis::periodic(6, 2.0, 0.25), Axis::open(7, 0.0, 2.0)]).unwrap();
        for site in [0, 17, 311, g.len() - 1] {
            let k = g.multi_index(site);
            assert_eq!(g.index(&k[..4]), site);
        }
        let x = g.coord(g.index(&[1, 2, 3, 4]));
        assert_eq!(x, [-0.5, 2.0, 2.75, 8.0]);
        let c = g.clone().cell_centered(true);
        assert_eq!(c.coord(0)[0], -0.75);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = Grid::open_box(3, 6, 0.0, 1.0).unwrap();
        let f = SampledField::from_fn(g, 2, |_, o| o.copy_from_slice(&[3.5, -1.0]));
        for axis in 0..3 {
            assert!(central_diff(&f, axis).unwrap().values().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn derivative_exact_for_linear_on_open_axis() {
        let g = Grid::new(vec![Axis::open(11, 0.0, 0.1), Axis::open(4, 0.0, 1.0), Axis::open(4, 0.0, 1.0)]).unwrap();
        let f = SampledField::from_fn(g, 1, |x, o| o[0] = x[0]);
        let d = central_diff(&f, 0).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn derivative_exact_for_quadratic_everywhere() {
        let g = Grid::new(vec![Axis::open(9, -1.0, 0.25), Axis::open(4, 0.0, 1.0), Axis::open(4, 0.0, 1.0)]).unwrap();
        let f = SampledField::from_fn(g, 1, |x, o| o[0] = 3.0 * x[0] * x[0] - x[0] + 2.0);
        let d = central_diff(&f, 0).unwrap();
        for site in 0..d.grid().len() {
            let x = d.grid().coord(site)[0];
            assert!((d.site(site)[0] - (6.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_derivative_error_within_h_squared() {
        let n = 64;
        let g = periodic_line(n);
        let f = SampledField::from_fn(g, 1, |x, o| o[0] = x[0].sin());
        let d = central_diff(&f, 0).unwrap();
        let h = 2.0 * PI / n as f64;
        let err = (0..d.grid().len())
            .map(|s| (d.site(s)[0] - d.grid().coord(s)[0].cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= h * h, "err = {err}");
    }

    #[test]
    fn fourth_order_stencil_converges_faster() {
        let errs: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&n| {
                let f = SampledField::from_fn(periodic_line(n), 1, |x, o| o[0] = x[0].sin());
                let d = central_diff_with(&f, 0, Stencil::Fourth).unwrap();
                (0..d.grid().len())
                    .map(|s| (d.site(s)[0] - d.grid().coord(s)[0].cos()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn constant_and_periodic_sine_integrals() {
        let g = periodic_line(32);
        let ones = ScalarField::new(g.clone(), vec![1.0; g.len()]).unwrap();
        let vol = 2.0 * PI * 4.0 * 4.0;
        assert!((integrate(&ones).unwrap() - vol).abs() < 1e-12);
        let s = ScalarField::from_sampled(SampledField::from_fn(g, 1, |x, o| o[0] = x[0].sin())).unwrap();
        assert!(integrate(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gaussian_over_open_box() {
        let g = Grid::open_box(4, 40, -5.0, 5.0).unwrap();
        let f = SampledField::from_fn(g, 1, |x, o| o[0] = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3])).exp());
        let v = integrate(&ScalarField::from_sampled(f).unwrap()).unwrap();
        let exact = PI * PI;
        assert!(((v - exact) / exact).abs() < 1e-4, "{v}");
    }

    #[test]
    fn orientation_flips_integral_sign() {
        let g = Grid::open_box(3, 5, 0.0, 1.0).unwrap().with_orientation(-1.0);
        let ones = ScalarField::new(g.clone(), vec![1.0; g.len()]).unwrap();
        assert!((integrate(&ones).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn masked_integration_reports_volume() {
        let g = Grid::open_box(4, 11, -1.0, 1.0).unwrap();
        let mask = Mask::balls(&g, &[[0.0; 4]], 0.25);
        assert_eq!(mask.count(), 9);
        let ones = ScalarField::new(g.clone(), vec![1.0; g.len()]).unwrap();
        let full = integrate(&ones).unwrap();
        let cut = integrate_masked(&ones, Some(&mask)).unwrap();
        assert!((full - cut - mask.excluded_volume(&g)).abs() < 1e-12);
        assert!((full - 16.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = Grid::open_box(3, 4, 0.0, 1.0).unwrap();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        assert!(matches!(integrate(&ScalarField::new(g, v).unwrap()), Err(Error::NonFinite { site: 5 })));
    }

    #[test]
    fn multilinear_interpolation_exact_for_affine() {
        let g = Grid::new(vec![Axis::open(5, -1.0, 0.5), Axis::periodic(8, 0.0, 0.25), Axis::open(6, 0.0, 0.2), Axis::open(4, 1.0, 1.0)]).unwrap();
        let f = SampledField::from_fn(g, 2, |x, o| {
            o[0] = 1.0 + 2.0 * x[0] - x[2] + 0.5 * x[3];
            o[1] = x[0] - 3.0 * x[3];
        });
        let mut out = [0.0; 2];
        let p = [0.3, 0.6, 0.77, 2.9];
        f.interpolate(&p, &mut out).unwrap();
        assert!((out[0] - (1.0 + 0.6 - 0.77 + 1.45)).abs() < 1e-12);
        assert!((out[1] - (0.3 - 8.7)).abs() < 1e-12);
        // upper corner of open axes is reachable
        f.interpolate(&[1.0, 0.0, 1.0, 4.0], &mut out).unwrap();
        assert!((out[1] - (1.0 - 12.0)).abs() < 1e-12);
        assert!(f.interpolate(&[1.5, 0.0, 0.0, 1.0], &mut out).is_err());
    }

    #[test]
    fn refinement_order_of_fd_and_quadrature() {
        // smooth periodic integrand: exp(sin x) over [0, 2pi)
        let fd_err = |n: usize| {
            let f = SampledField::from_fn(periodic_line(n), 1, |x, o| o[0] = x[0].sin().exp());
            let d = central_diff(&f, 0).unwrap();
            (0..d.grid().len())
                .map(|s| {
                    let x = d.grid().coord(s)[0];
                    (d.site(s)[0] - x.cos() * x.sin().exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(fd_err(16) / fd_err(32) >= 3.0);
        assert!(fd_err(32) / fd_err(64) >= 3.0);
        // open trapezoid on x^4 over [0,1]
        let q_err = |n: usize| {
            let g = Grid::new(vec![Axis::open(n, 0.0, 1.0 / (n - 1) as f64), Axis::periodic(4, 0.0, 0.25), Axis::periodic(4, 0.0, 0.25)]).unwrap();
            let f = SampledField::from_fn(g, 1, |x, o| o[0] = x[0].powi(4));
            (integrate(&ScalarField::from_sampled(f).unwrap()).unwrap() - 0.2).abs()
        };
        assert!(q_err(9) / q_err(17) >= 3.0);
    }
}
