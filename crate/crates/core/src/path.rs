//! Time grids and discretized sample paths.

use crate::error::{Error, Result};

/// Uniform grid `t_i = (offset + i)·step`, `i = 0..n_points`.
///
/// The plain constructor gives the grid `0, t_end/n, …, t_end`. A padded grid
/// extends it by whole steps on both sides, which is how the noise is sampled
/// on `[-ε, t + ε]`. Time zero is always a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    step: f64,
    offset: i64,
    n_points: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        Self::padded(t_end, n_steps, 0)
    }

    /// `[−pad·h, t_end + pad·h]` with `h = t_end / n_steps`.
    pub fn padded(t_end: f64, n_steps: usize, pad: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::domain(
                "TimeGrid",
                format!("t_end must be positive, got {t_end}"),
            ));
        }
        if n_steps == 0 {
            return Err(Error::domain("TimeGrid", "n_steps must be at least 1"));
        }
        Ok(TimeGrid {
            step: t_end / n_steps as f64,
            offset: -(pad as i64),
            n_points: n_steps + 1 + 2 * pad,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn n_steps(&self) -> usize {
        self.n_points - 1
    }

    pub fn start(&self) -> f64 {
        self.offset as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_points - 1)
    }

    pub fn time(&self, i: usize) -> f64 {
        (self.offset + i as i64) as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.time(i)).collect()
    }

    /// Index of the grid point at time zero.
    pub fn zero_index(&self) -> usize {
        (-self.offset) as usize
    }

    /// Index of the grid point equal to `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.step - self.offset as f64;
        let r = x.round();
        if (x - r).abs() > 1e-9 * (1.0 + x.abs()) || r < 0.0 || r as usize >= self.n_points {
            return None;
        }
        Some(r as usize)
    }

    /// Same spacing, rescaled in time by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        TimeGrid {
            step: self.step * c,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FbmMethod {
    CirculantEmbedding,
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    Brownian,
    Fractional { hurst: f64, method: FbmMethod },
    User,
}

/// An `ℝ^d`-valued path sampled on a [`TimeGrid`], evaluated off-grid by
/// linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
    kind: PathKind,
}

impl SamplePath {
    /// `values` is row-major: point `i` occupies `values[i*dim..(i+1)*dim]`.
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>, kind: PathKind) -> Result<Self> {
        if dim == 0 || values.len() != grid.len() * dim {
            return Err(Error::domain(
                "SamplePath",
                format!(
                    "expected {} values of dimension {dim}, got {}",
                    grid.len(),
                    values.len()
                ),
            ));
        }
        Ok(SamplePath {
            grid,
            dim,
            values,
            kind,
        })
    }

    /// Scalar path `s ↦ f(s)` on `grid`.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.times().into_iter().map(f).collect();
        SamplePath {
            grid,
            dim: 1,
            values,
            kind: PathKind::User,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value at time zero; the starting point `x` for Brownian paths.
    pub fn origin(&self) -> &[f64] {
        self.point(self.grid.zero_index())
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Linear interpolation at time `t`, clamped to the grid's range.
    pub fn at_into(&self, t: f64, out: &mut [f64]) {
        let h = self.grid.step;
        let x = (t - self.grid.start()) / h;
        let last = self.grid.len() - 1;
        let (i, w) = if x <= 0.0 {
            (0, 0.0)
        } else if x >= last as f64 {
            (last, 0.0)
        } else {
            let i = x.floor() as usize;
            (i, x - i as f64)
        };
        let d = self.dim;
        for k in 0..d {
            let a = self.values[i * d + k];
            out[k] = if w == 0.0 {
                a
            } else {
                a + w * (self.values[(i + 1) * d + k] - a)
            };
        }
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.at_into(t, &mut out);
        out
    }

    /// Values at the given times, row-major.
    pub fn sample_at(&self, times: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; times.len() * self.dim];
        for (i, t) in times.iter().enumerate() {
            self.at_into(*t, &mut out[i * self.dim..(i + 1) * self.dim]);
        }
        out
    }

    /// `sup_i |φ(t_i)|` in the Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| norm(self.point(i)))
            .fold(0.0, f64::max)
    }

    /// The time-reversed path `s ↦ φ(t − s)` on `[0, t]`, where `t` is the
    /// grid end. Requires a grid starting at zero.
    pub fn reversed(&self) -> Self {
        let n = self.len();
        let d = self.dim;
        let mut values = Vec::with_capacity(self.values.len());
        for i in (0..n).rev() {
            values.extend_from_slice(&self.values[i * d..(i + 1) * d]);
        }
        SamplePath {
            grid: self.grid.clone(),
            dim: d,
            values,
            kind: self.kind,
        }
    }

    /// Replaces every value by `f(value)`; used for snapping to a site lattice.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        SamplePath {
            grid: self.grid.clone(),
            dim: self.dim,
            values: self.values.iter().map(|v| f(*v)).collect(),
            kind: PathKind::User,
        }
    }
}

/// Finite set of points in `ℝ^d` with tolerant exact-match lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    dim: usize,
    coords: Vec<f64>,
    // sorted (coordinate, index) pairs, built only for d = 1
    order: Vec<(f64, usize)>,
}

impl SiteSet {
    pub fn new(sites: &[Vec<f64>]) -> Result<Self> {
        let dim = sites.first().map_or(0, |s| s.len());
        if dim == 0 || sites.iter().any(|s| s.len() != dim) {
            return Err(Error::domain(
                "SiteSet",
                "sites must be nonempty points of one dimension",
            ));
        }
        let mut order = Vec::new();
        if dim == 1 {
            order = sites.iter().enumerate().map(|(i, s)| (s[0], i)).collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Ok(SiteSet {
            dim,
            coords: sites.concat(),
            order,
        })
    }

    /// Scalar sites.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(&xs.iter().map(|x| vec![*x]).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.site(i).to_vec()).collect()
    }

    fn tol(x: f64) -> f64 {
        1e-12 * (1.0 + x.abs())
    }

    /// Index of the site equal to `x` up to a relative `1e-12`.
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        if self.dim == 1 {
            let v = x[0];
            let pos = self.order.partition_point(|(s, _)| *s < v - Self::tol(v));
            return self
                .order
                .get(pos)
                .filter(|(s, _)| (s - v).abs() <= Self::tol(v))
                .map(|(_, i)| *i);
        }
        (0..self.len()).find(|&i| {
            self.site(i)
                .iter()
                .zip(x)
                .all(|(s, v)| (s - v).abs() <= Self::tol(*v))
        })
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_and_padding() {
        let g = TimeGrid::padded(1.0, 4, 2).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.start(), -0.5);
        assert_eq!(g.end(), 1.5);
        assert_eq!(g.zero_index(), 2);
        assert_eq!(g.index_of(0.75), Some(5));
        assert_eq!(g.index_of(0.8), None);
        assert!(g.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn interpolation_is_linear_between_points() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        let p = SamplePath::from_fn(g, |s| s * s);
        assert_eq!(p.at(0.25)[0], 0.125);
        assert_eq!(p.at(1.0)[0], 1.0);
        assert_eq!(p.at(2.0)[0], 1.0);
    }

    #[test]
    fn reversal_flips_values() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let p = SamplePath::from_fn(g, |s| s);
        let r = p.reversed();
        assert_eq!(r.point(0)[0], 1.0);
        assert_eq!(r.point(4)[0], 0.0);
    }
}
