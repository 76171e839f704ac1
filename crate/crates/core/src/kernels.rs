//! Scalar kernels and spatial covariances.

use crate::error::{Error, Result};
use crate::path::{dist, SamplePath, SiteSet};

/// Hurst index of the time covariance, restricted to the rough regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstParams {
    h: f64,
}

impl HurstParams {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 0.5) {
            return Err(Error::domain(
                "HurstParams",
                format!("H must lie in (0, 1/2), got {h}"),
            ));
        }
        Ok(HurstParams { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `α_H = 2H(2H − 1)`, negative in the rough regime.
    pub fn alpha_h(&self) -> f64 {
        2.0 * self.h * (2.0 * self.h - 1.0)
    }
}

/// `|x|^p` with `0^p = 0` for `p > 0`.
#[inline]
pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(p)
    }
}

/// Fractional Brownian covariance `R_H(t,s)`; valid for any `H ∈ (0,1)`.
pub fn rh_cov(t: f64, s: f64, h: f64) -> f64 {
    let p = 2.0 * h;
    0.5 * (pow_abs(t, p) + pow_abs(s, p) - pow_abs(t - s, p))
}

/// Second mixed difference quotient of `R_H` at lag `r`.
pub fn v_kernel(r: f64, eps: f64, delta: f64, h: f64) -> f64 {
    let p = 2.0 * h;
    let r = r.abs();
    (pow_abs(r + eps + delta, p) + pow_abs(r - eps - delta, p)
        - pow_abs(r - eps + delta, p)
        - pow_abs(r + eps - delta, p))
        / (4.0 * eps * delta)
}

/// `2^{3−2H} H (1−2H) r^{2H−2}`, which dominates `|v_kernel|` when `r ≥ 4ε ≥ 4δ`.
pub fn v_kernel_bound(r: f64, hp: HurstParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(
            "v_kernel_bound",
            format!("r must be positive, got {r}"),
        ));
    }
    let h = hp.h();
    Ok(2f64.powf(3.0 - 2.0 * h) * h * (1.0 - 2.0 * h) * r.powf(2.0 * h - 2.0))
}

/// Regularity and growth constants declared for a covariance.
///
/// `c0, alpha` bound the increment variance, `c1` the growth on balls and
/// `c2, beta` the lower bound on the positive orthant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QConstants {
    pub c0: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
}

impl QConstants {
    fn validate(&self) -> Result<()> {
        let ok = self.c0 >= 0.0
            && self.alpha > 0.0
            && self.alpha <= 1.0
            && self.c1 >= 0.0
            && self.c2 >= 0.0
            && (0.0..1.0).contains(&self.beta);
        if ok {
            Ok(())
        } else {
            Err(Error::domain(
                "CovarianceQ",
                format!("invalid declared constants {self:?}"),
            ))
        }
    }
}

/// Gram matrix of a covariance on a finite site set.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    sites: SiteSet,
    matrix: Vec<f64>,
}

impl Table {
    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    fn index_of(&self, x: &[f64]) -> Result<usize> {
        self.sites
            .find(x)
            .ok_or_else(|| Error::Lookup { point: x.to_vec() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QKind {
    Constant(f64),
    FbmSpatial { theta: f64 },
    Tabulated(Table),
}

/// Spatial covariance `Q(x,y)` together with its declared constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceQ {
    kind: QKind,
    constants: QConstants,
}

impl CovarianceQ {
    /// `Q ≡ c`. Increments vanish, so `C₀ = 0`; `β = 0` with `C₂ = c`.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::domain(
                "CovarianceQ::constant",
                format!("c must be ≥ 0, got {c}"),
            ));
        }
        Ok(CovarianceQ {
            kind: QKind::Constant(c),
            constants: QConstants {
                c0: 0.0,
                alpha: 1.0,
                c1: c,
                c2: c,
                beta: 0.0,
            },
        })
    }

    /// Covariance of a one-dimensional fBm in space with index `Θ ∈ (0,1)`.
    ///
    /// Declared `α = β = Θ`, `C₀ = C₁ = 1`. The orthant infimum of
    /// `Q/M^{2Θ}` is `1` for `Θ ≥ 1/2` and `1/2` (not attained) for `Θ < 1/2`.
    pub fn fbm_spatial(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::domain(
                "CovarianceQ::fbm_spatial",
                format!("Θ must lie in (0,1), got {theta}"),
            ));
        }
        let c2 = if theta >= 0.5 { 1.0 } else { 0.5 };
        Ok(CovarianceQ {
            kind: QKind::FbmSpatial { theta },
            constants: QConstants {
                c0: 1.0,
                alpha: theta,
                c1: 1.0,
                c2,
                beta: theta,
            },
        })
    }

    /// Gram matrix given on `sites` (row-major `n×n`), with declared constants.
    pub fn tabulated(
        sites: Vec<Vec<f64>>,
        matrix: Vec<f64>,
        constants: QConstants,
    ) -> Result<Self> {
        constants.validate()?;
        let n = sites.len();
        let dim = sites.first().map_or(0, |s| s.len());
        if n == 0 || dim == 0 || sites.iter().any(|s| s.len() != dim) || matrix.len() != n * n {
            return Err(Error::domain(
                "CovarianceQ::tabulated",
                "sites and matrix shapes disagree",
            ));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (matrix[i * n + j], matrix[j * n + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::domain(
                        "CovarianceQ::tabulated",
                        format!("matrix is not symmetric at ({i},{j})"),
                    ));
                }
            }
        }
        let table = Table {
            sites: SiteSet::new(&sites)?,
            matrix,
        };
        Ok(CovarianceQ {
            kind: QKind::Tabulated(table),
            constants,
        })
    }

    /// Replaces the declared constants.
    pub fn with_constants(mut self, constants: QConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn kind(&self) -> &QKind {
        &self.kind
    }

    pub fn constants(&self) -> QConstants {
        self.constants
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, QKind::Constant(_))
    }

    /// Spatial dimension the kind accepts; `None` means any.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            QKind::Constant(_) => None,
            QKind::FbmSpatial { .. } => Some(1),
            QKind::Tabulated(t) => Some(t.sites.dim()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match &self.kind {
            QKind::Constant(c) => Ok(*c),
            QKind::FbmSpatial { theta } => {
                if x.len() != 1 || y.len() != 1 {
                    return Err(Error::domain(
                        "q_eval",
                        "fbm_spatial covariance is defined for d = 1 only",
                    ));
                }
                Ok(fbm_q(x[0], y[0], 2.0 * theta))
            }
            QKind::Tabulated(t) => {
                let (i, j) = (t.index_of(x)?, t.index_of(y)?);
                Ok(t.matrix[i * t.sites.len() + j])
            }
        }
    }

    /// Gram matrix `[Q(x_i, x_j)]`, row-major.
    pub fn gram(&self, sites: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = sites.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(&sites[i], &sites[j])?;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }
}

#[inline]
pub(crate) fn fbm_q(x: f64, y: f64, p: f64) -> f64 {
    0.5 * (pow_abs(x, p) + pow_abs(y, p) - pow_abs(x - y, p))
}

pub fn q_eval(q: &CovarianceQ, x: &[f64], y: &[f64]) -> Result<f64> {
    q.eval(x, y)
}

/// The rectangle combination `Q̂(u,v,φ,ψ)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RectIncrement(pub f64);

pub fn q_hat(
    q: &CovarianceQ,
    phi_u: &[f64],
    phi_v: &[f64],
    psi_u: &[f64],
    psi_v: &[f64],
) -> Result<RectIncrement> {
    if q.is_constant() {
        return Ok(RectIncrement(0.0));
    }
    let v = 0.5
        * (q.eval(phi_u, psi_u)? + q.eval(phi_v, psi_v)?
            - q.eval(phi_u, psi_v)?
            - q.eval(phi_v, psi_u)?);
    Ok(RectIncrement(v))
}

/// Grid estimate of the `κ`-Hölder seminorm: `max_{i<j} |φ_j − φ_i| / (t_j − t_i)^κ`.
///
/// Biased low relative to the continuum seminorm.
pub fn holder_norm(path: &SamplePath, kappa: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::domain(
            "holder_norm",
            "path needs at least two grid points",
        ));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::domain(
            "holder_norm",
            format!("κ must lie in (0,1], got {kappa}"),
        ));
    }
    let g = path.grid();
    let mut best = 0.0f64;
    for i in 0..path.len() {
        for j in i + 1..path.len() {
            let dt = g.time(j) - g.time(i);
            best = best.max(dist(path.point(j), path.point(i)) / dt.powf(kappa));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Increment variance exceeds `C₀|x−y|^{2α}`.
    H1 {
        x: Vec<f64>,
        y: Vec<f64>,
        ratio: f64,
    },
    /// Rectangle increment exceeds `C₀|x−y|^α|u−w|^α`.
    Rect {
        x: Vec<f64>,
        y: Vec<f64>,
        u: Vec<f64>,
        w: Vec<f64>,
        ratio: f64,
    },
    /// `Q(x,y) < C₂ M^{2β}` on the orthant above level `M`.
    H2 { level: f64, ratio: f64 },
}

/// Audit of declared constants against sampled evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct H1H2Report {
    /// Smallest `C₀` admissible for the increment-variance form on the samples.
    pub fitted_c0: f64,
    /// Smallest `C₀` admissible for the rectangle form on the samples.
    pub fitted_c0_rect: f64,
    /// Slope/2 of a log-log fit of increment variance against distance.
    pub fitted_alpha: Option<f64>,
    /// Worst-case `inf Q / M^{2β}` over the probed levels.
    pub fitted_c2: Option<f64>,
    /// `inf Q / M^{2β}` per probed level.
    pub c2_per_level: Vec<(f64, f64)>,
    pub violations: Vec<Violation>,
}

/// Audits (H1) in both its increment and rectangle forms on `pairs`, and
/// (H2) at each level in `h2_levels`.
///
/// Rectangle quadruples are formed from consecutive pairs and from each pair
/// with itself. (H2) is probed on a 33-point grid of `[M, 4M]^2` for
/// closed-form kinds and on the tabulated sites otherwise.
pub fn check_h1_h2(
    q: &CovarianceQ,
    pairs: &[(Vec<f64>, Vec<f64>)],
    h2_levels: &[f64],
) -> Result<H1H2Report> {
    if pairs.is_empty() {
        return Err(Error::domain("check_h1_h2", "sample set is empty"));
    }
    const TOL: f64 = 1e-9;
    let k = q.constants();
    let mut violations = Vec::new();
    let mut fitted_c0 = 0.0f64;
    let mut logs = (Vec::new(), Vec::new());
    let mut incr = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let v = q.eval(x, x)? + q.eval(y, y)? - 2.0 * q.eval(x, y)?;
        let r = dist(x, y);
        incr.push(v);
        if r == 0.0 {
            continue;
        }
        let ratio = v / r.powf(2.0 * k.alpha);
        fitted_c0 = fitted_c0.max(ratio);
        if v > k.c0 * r.powf(2.0 * k.alpha) * (1.0 + TOL) + TOL {
            violations.push(Violation::H1 {
                x: x.clone(),
                y: y.clone(),
                ratio,
            });
        }
        if v > 0.0 {
            logs.0.push(r.ln());
            logs.1.push(v.ln());
        }
    }
    let fitted_alpha = (logs.0.len() >= 2).then(|| crate::stats::ols(&logs.0, &logs.1).slope / 2.0);

    let mut fitted_c0_rect = 0.0f64;
    for a in 0..pairs.len() {
        for b in [a, (a + 1) % pairs.len()] {
            let ((x, y), (u, w)) = (&pairs[a], &pairs[b]);
            let rect = q.eval(x, u)? + q.eval(y, w)? - q.eval(x, w)? - q.eval(y, u)?;
            let scale = (dist(x, y) * dist(u, w)).powf(k.alpha);
            if scale == 0.0 {
                continue;
            }
            let ratio = rect.abs() / scale;
            fitted_c0_rect = fitted_c0_rect.max(ratio);
            if rect.abs() > k.c0 * scale * (1.0 + TOL) + TOL {
                violations.push(Violation::Rect {
                    x: x.clone(),
                    y: y.clone(),
                    u: u.clone(),
                    w: w.clone(),
                    ratio,
                });
            }
        }
    }

    let mut c2_per_level = Vec::new();
    for &m in h2_levels {
        if !(m > 0.0) {
            return Err(Error::domain(
                "check_h1_h2",
                format!("(H2) level must be positive, got {m}"),
            ));
        }
        let points: Vec<Vec<f64>> = match q.kind() {
            QKind::Tabulated(t) => (0..t.sites.len())
                .map(|i| t.sites.site(i).to_vec())
                .filter(|s| s.iter().all(|c| *c >= m))
                .collect(),
            _ => (0..33)
                .map(|i| vec![m + 3.0 * m * i as f64 / 32.0])
                .collect(),
        };
        if points.is_empty() {
            continue;
        }
        let mut inf = f64::INFINITY;
        for x in &points {
            for y in &points {
                inf = inf.min(q.eval(x, y)?);
            }
        }
        let ratio = inf / m.powf(2.0 * k.beta);
        if ratio < k.c2 * (1.0 - TOL) {
            violations.push(Violation::H2 { level: m, ratio });
        }
        c2_per_level.push((m, ratio));
    }
    let fitted_c2 = c2_per_level.iter().map(|(_, r)| *r).reduce(f64::min);
    Ok(H1H2Report {
        fitted_c0,
        fitted_c0_rect,
        fitted_alpha,
        fitted_c2,
        c2_per_level,
        violations,
    })
}
