//! Monte Carlo for the moments and single realizations of the solution.

use statrs::function::gamma::ln_gamma;

use crate::analytic_bounds::u_functional;
use crate::error::{Error, Result};
use crate::gaussian_paths::{
    sample_bm, FbmGenerator, SpaceTimeFieldSampler, SpatialFieldSampler, DEFAULT_CAP,
};
use crate::kernels::{CovarianceQ, HurstParams, QKind};
use crate::path::{PathKind, SamplePath, SiteSet, TimeGrid};
use crate::quadrature::QuadratureSpec;
use crate::rng::{child_seed, par_map, stream};
use crate::stats::{log_mean_exp, mean_stderr, ols};
use crate::stochastic_integral::{cov_closed_form, integral_eps, y_bhat_integral};

/// Default cap on `k · n_steps · n_rep`.
pub const DEFAULT_WORK_CAP: u64 = 1 << 34;

/// Bounded measurable initial condition.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Constant(f64),
    /// Nearest-neighbour lookup over tabulated points.
    Table {
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

impl InitialData {
    fn validate(&self, d: usize) -> Result<()> {
        let ok = match self {
            InitialData::Constant(c) => *c >= 0.0 && c.is_finite(),
            InitialData::Table { points, values } => {
                !points.is_empty()
                    && points.len() == values.len()
                    && points.iter().all(|p| p.len() == d)
                    && values.iter().all(|v| *v >= 0.0 && v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(
                "u0",
                "initial data must be finite, nonnegative and match the dimension",
            ))
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialData::Constant(c) => *c,
            InitialData::Table { points, values } => {
                let d2 = |p: &[f64]| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                let best = (0..points.len())
                    .min_by(|&i, &j| d2(&points[i]).total_cmp(&d2(&points[j])))
                    .expect("table is nonempty");
                values[best]
            }
        }
    }
}

/// Monte Carlo configuration.
///
/// Brownian paths are sampled with `2·n_steps` steps so that the midpoints
/// of the `n_steps` quadrature cells are exact samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MCConfig {
    pub n_rep: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub u0: InitialData,
    pub workers: usize,
    pub work_cap: u64,
}

impl MCConfig {
    pub fn new(n_rep: usize, n_steps: usize, seed: u64, k: usize, t: f64) -> Self {
        MCConfig {
            n_rep,
            n_steps,
            seed,
            k,
            t,
            x: vec![0.0],
            u0: InitialData::Constant(1.0),
            workers: 1,
            work_cap: DEFAULT_WORK_CAP,
        }
    }

    fn validate(&self, q: &CovarianceQ) -> Result<()> {
        if self.n_rep < 2 {
            return Err(Error::domain("MCConfig", "n_rep must be at least 2"));
        }
        if self.k < 1 {
            return Err(Error::domain("MCConfig", "k must be at least 1"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::domain(
                "MCConfig",
                format!("t must be positive, got {}", self.t),
            ));
        }
        if self.x.is_empty() {
            return Err(Error::domain(
                "MCConfig",
                "x must have dimension at least 1",
            ));
        }
        if let Some(d) = q.dim() {
            if d != self.x.len() {
                return Err(Error::domain(
                    "MCConfig",
                    format!("covariance needs d = {d}, x has d = {}", self.x.len()),
                ));
            }
        }
        self.u0.validate(self.x.len())?;
        let work = (self.k as u64)
            .saturating_mul(self.n_steps as u64)
            .saturating_mul(self.n_rep as u64);
        if work > self.work_cap {
            return Err(Error::Resource {
                op: "moment_estimate",
                needed: work.min(usize::MAX as u64) as usize,
                cap: self.work_cap.min(usize::MAX as u64) as usize,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentDiagnostics {
    pub max_exponent: f64,
    pub effective_sample_size: f64,
    /// Replications dropped for a non-finite exponent.
    pub excluded: usize,
    /// False when the ESS falls below 0.5% of the replications.
    pub reliable: bool,
}

/// Log-domain estimate of `E[u(t,x)^k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub log_moment: f64,
    pub stderr_log: f64,
    pub n_rep: usize,
    pub k: usize,
    pub t: f64,
    pub seed: u64,
    pub diagnostics: MomentDiagnostics,
}

/// `½ Σ_{i,j} E[I(B^i) I(B^j)]`, each symmetric pair evaluated once.
pub fn pairwise_exponent(
    paths: &[SamplePath],
    q: &CovarianceQ,
    hp: HurstParams,
    quad: QuadratureSpec,
) -> Result<f64> {
    let Some(first) = paths.first() else {
        return Err(Error::domain("pairwise_exponent", "need at least one path"));
    };
    let t = first.grid().end();
    if paths
        .iter()
        .any(|p| p.grid() != first.grid() || p.origin() != first.origin())
    {
        return Err(Error::domain(
            "pairwise_exponent",
            "paths must share grid and start point",
        ));
    }
    let mut sum = 0.0;
    for i in 0..paths.len() {
        sum += cov_closed_form(q, &paths[i], &paths[i], t, hp, quad)?.value;
        for j in i + 1..paths.len() {
            sum += 2.0 * cov_closed_form(q, &paths[i], &paths[j], t, hp, quad)?.value;
        }
    }
    Ok(0.5 * sum)
}

fn ln_u0(u0: &InitialData, x: &[f64]) -> f64 {
    let v = u0.eval(x);
    if v == 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

/// Monte Carlo estimate of `log E[u(t,x)^k]` from the pairwise exponent of
/// `k` independent Brownian paths.
pub fn moment_estimate(cfg: &MCConfig, q: &CovarianceQ, hp: HurstParams) -> Result<MomentEstimate> {
    cfg.validate(q)?;
    let quad = QuadratureSpec::brownian(cfg.n_steps)?;
    let k = cfg.k as f64;
    if let (QKind::Constant(c), InitialData::Constant(_)) = (q.kind(), &cfg.u0) {
        let log_moment = 0.5 * k * k * c * cfg.t.powf(2.0 * hp.h()) + k * ln_u0(&cfg.u0, &cfg.x);
        return Ok(MomentEstimate {
            log_moment,
            stderr_log: 0.0,
            n_rep: cfg.n_rep,
            k: cfg.k,
            t: cfg.t,
            seed: cfg.seed,
            diagnostics: MomentDiagnostics {
                max_exponent: log_moment,
                effective_sample_size: cfg.n_rep as f64,
                excluded: 0,
                reliable: true,
            },
        });
    }
    let grid = TimeGrid::new(cfg.t, 2 * cfg.n_steps)?;
    let exps: Vec<Result<f64>> = par_map(cfg.workers, cfg.n_rep, |r| {
        let mut rng = stream(cfg.seed, r as u64);
        let mut paths = Vec::with_capacity(cfg.k);
        for _ in 0..cfg.k {
            paths.push(sample_bm(&grid, &cfg.x, &mut rng)?);
        }
        let mut s = pairwise_exponent(&paths, q, hp, quad)?;
        for p in &paths {
            s += ln_u0(&cfg.u0, p.point(p.len() - 1));
        }
        Ok(s)
    });
    let mut kept = Vec::with_capacity(cfg.n_rep);
    let mut excluded = 0;
    for e in exps {
        let s = e?;
        if s.is_nan() || s == f64::INFINITY {
            excluded += 1;
        } else {
            kept.push(s);
        }
    }
    if excluded * 100 > cfg.n_rep {
        return Err(Error::Estimation(format!(
            "{excluded} of {} replications had a non-finite exponent",
            cfg.n_rep
        )));
    }
    if kept.iter().all(|s| *s == f64::NEG_INFINITY) {
        return Err(Error::Estimation(
            "every replication has zero weight".into(),
        ));
    }
    let lm = log_mean_exp(&kept);
    Ok(MomentEstimate {
        log_moment: lm.log_mean,
        stderr_log: lm.stderr,
        n_rep: cfg.n_rep,
        k: cfg.k,
        t: cfg.t,
        seed: cfg.seed,
        diagnostics: MomentDiagnostics {
            max_exponent: lm.max_exponent,
            effective_sample_size: lm.ess,
            excluded,
            reliable: lm.ess >= 0.005 * cfg.n_rep as f64,
        },
    })
}

/// Cap on `|time grid| · |lattice|` for the space-time noise of the nested sampler.
pub const NESTED_FIELD_CAP: usize = 1 << 20;

/// Noise driving the nested sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Gaussian `W` with covariance `R_H ⊗ Q` on the time grid × lattice.
    Gaussian,
    /// `Y(x)·B̂_t` with independent `Y` and `B̂`. Same covariance as `W` but
    /// not Gaussian, so exponential moments differ from the Gaussian model.
    Factorized,
}

enum Noise {
    Gaussian(SpaceTimeFieldSampler),
    Factorized {
        field: SpatialFieldSampler,
        fbm: FbmGenerator,
    },
}

/// Nested estimator of single realizations `u(t,x)`.
///
/// Inner Brownian paths are snapped to a spatial lattice on which the noise
/// is sampled; the Riemann step and `ε` both equal the time step `t/n_steps`.
pub struct SolutionSampler {
    cfg: MCConfig,
    n_inner: usize,
    grid: TimeGrid,
    noise: Noise,
    lattice: Lattice,
    // constant path at x, used with the single-site lattice
    frozen: SamplePath,
}

#[derive(Debug, Clone, Copy)]
enum Lattice {
    /// One site at the start point; valid when `Q` is constant.
    Single,
    Uniform {
        origin: f64,
        spacing: f64,
        half_width: usize,
    },
}

impl Lattice {
    fn snap(&self, x: f64, x0: f64) -> f64 {
        match *self {
            Lattice::Single => x0,
            Lattice::Uniform {
                origin,
                spacing,
                half_width,
            } => {
                let j = ((x - origin) / spacing)
                    .round()
                    .clamp(-(half_width as f64), half_width as f64);
                origin + j * spacing
            }
        }
    }
}

impl SolutionSampler {
    /// `spacing` is the lattice step; the lattice spans `x ± 7√t`. Paths
    /// leaving it are clamped to its ends.
    pub fn new(
        cfg: &MCConfig,
        q: &CovarianceQ,
        hp: HurstParams,
        n_inner: usize,
        spacing: f64,
    ) -> Result<Self> {
        Self::with_noise(cfg, q, hp, n_inner, spacing, NoiseModel::Gaussian)
    }

    pub fn with_noise(
        cfg: &MCConfig,
        q: &CovarianceQ,
        hp: HurstParams,
        n_inner: usize,
        spacing: f64,
        model: NoiseModel,
    ) -> Result<Self> {
        cfg.validate(q)?;
        if n_inner < 1 {
            return Err(Error::domain(
                "solution_sample",
                "n_inner must be at least 1",
            ));
        }
        let work = (n_inner as u64).saturating_mul(cfg.n_steps as u64);
        if work > cfg.work_cap {
            return Err(Error::Resource {
                op: "solution_sample",
                needed: work as usize,
                cap: cfg.work_cap as usize,
            });
        }
        let d = cfg.x.len();
        let (lattice, sites) = if q.is_constant() {
            (Lattice::Single, vec![cfg.x.clone()])
        } else if d == 1 {
            if !(spacing > 0.0) {
                return Err(Error::domain(
                    "solution_sample",
                    "lattice spacing must be positive",
                ));
            }
            let half_width = (7.0 * cfg.t.sqrt() / spacing).ceil() as usize;
            let origin = cfg.x[0];
            let sites = (0..=2 * half_width)
                .map(|j| vec![origin + (j as f64 - half_width as f64) * spacing])
                .collect();
            (
                Lattice::Uniform {
                    origin,
                    spacing,
                    half_width,
                },
                sites,
            )
        } else {
            return Err(Error::domain(
                "solution_sample",
                "non-constant Q requires d = 1",
            ));
        };
        let grid = TimeGrid::new(cfg.t, cfg.n_steps)?;
        let padded = TimeGrid::padded(cfg.t, cfg.n_steps, 1)?;
        let noise = match model {
            NoiseModel::Gaussian => Noise::Gaussian(SpaceTimeFieldSampler::new(
                &padded,
                SiteSet::new(&sites)?,
                hp.h(),
                q,
                NESTED_FIELD_CAP,
            )?),
            NoiseModel::Factorized => {
                let field = SpatialFieldSampler::new(q, SiteSet::new(&sites)?, DEFAULT_CAP);
                field.jitter()?;
                Noise::Factorized {
                    field,
                    fbm: FbmGenerator::new(&padded, hp.h())?,
                }
            }
        };
        let frozen = SamplePath::new(grid.clone(), d, cfg.x.repeat(grid.len()), PathKind::User)?;
        Ok(SolutionSampler {
            cfg: cfg.clone(),
            n_inner,
            grid,
            noise,
            lattice,
            frozen,
        })
    }

    /// Inner terms `u0(B_t^x) exp(∫ W(ds, B_{t−s}^x))` for outer draw `rep`.
    pub fn inner_terms(&self, rep: u64) -> Result<Vec<f64>> {
        let mut outer = stream(self.cfg.seed, rep);
        let (w, yb) = match &self.noise {
            Noise::Gaussian(s) => (Some(s.sample(&mut outer)?), None),
            Noise::Factorized { field, fbm } => (
                None,
                Some((field.sample(&mut outer)?, fbm.sample(&mut outer))),
            ),
        };
        let integrate = |phi: &SamplePath| match (&w, &yb) {
            (Some(w), _) => integral_eps(w, phi, self.cfg.t, self.grid.step()),
            (_, Some((y, bhat))) => y_bhat_integral(y, bhat, phi, self.cfg.t, self.grid.step()),
            _ => unreachable!("one noise is always sampled"),
        };
        let x0 = self.cfg.x[0];
        let inner_seed = child_seed(self.cfg.seed, rep.wrapping_add(1));
        (0..self.n_inner)
            .map(|j| {
                let mut rng = stream(inner_seed, j as u64);
                let b = sample_bm(&self.grid, &self.cfg.x, &mut rng)?;
                let end = b.point(b.len() - 1).to_vec();
                let integral = match self.lattice {
                    Lattice::Single => integrate(&self.frozen)?,
                    lat => integrate(&b.reversed().map_values(|v| lat.snap(v, x0)))?,
                };
                Ok(self.cfg.u0.eval(&end) * integral.exp())
            })
            .collect()
    }

    /// One approximate realization of `u(t,x)`.
    pub fn sample(&self, rep: u64) -> Result<f64> {
        let terms = self.inner_terms(rep)?;
        Ok(terms.iter().sum::<f64>() / terms.len() as f64)
    }

    /// `n_rep` independent realizations, in replication order.
    pub fn ensemble(&self) -> Result<Vec<f64>> {
        par_map(self.cfg.workers, self.cfg.n_rep, |r| self.sample(r as u64))
            .into_iter()
            .collect()
    }
}

/// One realization of `u(t,x)` on a lattice of spacing `t/n_steps`.
pub fn solution_sample(
    cfg: &MCConfig,
    q: &CovarianceQ,
    hp: HurstParams,
    n_inner: usize,
) -> Result<f64> {
    let spacing = cfg.t / cfg.n_steps as f64;
    SolutionSampler::new(cfg, q, hp, n_inner, spacing)?.sample(0)
}

/// Constant `Θ = 2/((2H+α−1)(2H+α))`, the integral of `|u−v|^{2H+α−2}` over `[0,1]²`.
pub fn theta_const(alpha: f64, h: f64) -> f64 {
    let s = 2.0 * h + alpha;
    2.0 / ((s - 1.0) * s)
}

/// `E|B₁|^{2α}` for a standard Brownian motion in `ℝ^d`.
pub fn brownian_abs_moment(alpha: f64, d: usize) -> f64 {
    let hd = d as f64 / 2.0;
    (alpha * 2f64.ln() + ln_gamma(hd + alpha) - ln_gamma(hd)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub t: f64,
    pub exponent: f64,
    /// `m_j(U_t)/(t^{j(2H+α)} m_j(U_1)) − 1` for the first three raw moments.
    pub rel_discrepancy: [f64; 3],
    pub mean_t: f64,
    pub stderr_t: f64,
    /// `E|B₁|^{2α} Θ t^{2H+α}`.
    pub exact_mean_t: f64,
    pub mean_1: f64,
    pub stderr_1: f64,
    /// `mean_t / mean_1` and its delta-method standard error.
    pub first_moment_ratio: f64,
    pub ratio_stderr: f64,
}

/// Compares `U` on `[0,t]` with `t^{2H+α}·U` on `[0,1]` over a shared
/// ensemble of Brownian paths (the `[0,t]` path of replication `r` uses the
/// same normals as the `[0,1]` path), plus an independent ensemble on
/// `[0,1]` for the first-moment ratio.
pub fn scaling_check(
    alpha: f64,
    hp: HurstParams,
    t: f64,
    n_rep: usize,
    seed: u64,
    n_cells: usize,
    workers: usize,
) -> Result<ScalingReport> {
    let h = hp.h();
    if !(2.0 * h + alpha > 1.0) {
        return Err(Error::domain("scaling_check", "2H + α must exceed 1"));
    }
    if n_rep < 2 {
        return Err(Error::domain("scaling_check", "n_rep must be at least 2"));
    }
    let quad = QuadratureSpec::brownian(n_cells)?;
    let unit = TimeGrid::new(1.0, 2 * n_cells)?;
    let long = TimeGrid::new(t, 2 * n_cells)?;
    let indep_seed = child_seed(seed, 0x5ca1e);
    let rows: Vec<Result<(f64, f64, f64)>> = par_map(workers, n_rep, |r| {
        let b1 = sample_bm(&unit, &[0.0], &mut stream(seed, r as u64))?;
        let bt = sample_bm(&long, &[0.0], &mut stream(seed, r as u64))?;
        let b1i = sample_bm(&unit, &[0.0], &mut stream(indep_seed, r as u64))?;
        Ok((
            u_functional(&b1, alpha, h, quad)?,
            u_functional(&bt, alpha, h, quad)?,
            u_functional(&b1i, alpha, h, quad)?,
        ))
    });
    let rows: Vec<(f64, f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let u1: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ut: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let u1i: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let exponent = 2.0 * h + alpha;
    let raw =
        |xs: &[f64], j: i32| crate::stats::mean(&xs.iter().map(|x| x.powi(j)).collect::<Vec<_>>());
    let mut rel = [0.0; 3];
    for (j, r) in rel.iter_mut().enumerate() {
        let p = j as i32 + 1;
        let scaled = t.powf(exponent * p as f64) * raw(&u1, p);
        *r = if t == 1.0 {
            raw(&ut, p) / raw(&u1, p) - 1.0
        } else {
            raw(&ut, p) / scaled - 1.0
        };
    }
    let (mean_t, stderr_t) = mean_stderr(&ut);
    let (mean_1, stderr_1) = mean_stderr(&u1i);
    let ratio = mean_t / mean_1;
    let ratio_stderr = ratio * ((stderr_t / mean_t).powi(2) + (stderr_1 / mean_1).powi(2)).sqrt();
    Ok(ScalingReport {
        t,
        exponent,
        rel_discrepancy: rel,
        mean_t,
        stderr_t,
        exact_mean_t: brownian_abs_moment(alpha, 1) * theta_const(alpha, h) * t.powf(exponent),
        mean_1,
        stderr_1,
        first_moment_ratio: ratio,
        ratio_stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    VsT,
    VsK,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovFit {
    pub mode: FitMode,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Range of `t` or `k` covered by the fit.
    pub window: (f64, f64),
}

/// Exponent of `t` in the moment asymptotics, `(2H+α)/(1−α)`.
pub fn theory_slope_t(h: f64, alpha: f64) -> f64 {
    (2.0 * h + alpha) / (1.0 - alpha)
}

/// Exponent of `k` in the moment asymptotics, `(2−α)/(1−α)`.
pub fn theory_slope_k(alpha: f64) -> f64 {
    (2.0 - alpha) / (1.0 - alpha)
}

/// Least-squares slope of `log(log_moment)` against `log t` or `log k`.
pub fn lyapunov_fit(estimates: &[MomentEstimate], mode: FitMode) -> Result<LyapunovFit> {
    if estimates.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 estimates, got {}",
            estimates.len()
        )));
    }
    if let Some(e) = estimates.iter().find(|e| !(e.log_moment > 0.0)) {
        return Err(Error::Fit(format!(
            "log moment {} at (k = {}, t = {}) is not positive: pre-asymptotic regime",
            e.log_moment, e.k, e.t
        )));
    }
    let xs: Vec<f64> = estimates
        .iter()
        .map(|e| match mode {
            FitMode::VsT => e.t,
            FitMode::VsK => e.k as f64,
        })
        .collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Fit("estimates do not span a range".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = estimates.iter().map(|e| e.log_moment.ln()).collect();
    let f = ols(&lx, &ly);
    Ok(LyapunovFit {
        mode,
        slope: f.slope,
        intercept: f.intercept,
        r2: f.r2,
        window: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_q_moment_is_exact() {
        let q = CovarianceQ::constant(1.0).unwrap();
        let hp = HurstParams::new(0.3).unwrap();
        let e = moment_estimate(&MCConfig::new(10, 8, 1, 2, 1.0), &q, hp).unwrap();
        assert_eq!(e.log_moment, 2.0);
        assert_eq!(e.stderr_log, 0.0);
        let z = moment_estimate(
            &MCConfig::new(10, 8, 1, 3, 2.0),
            &CovarianceQ::constant(0.0).unwrap(),
            hp,
        )
        .unwrap();
        assert_eq!(z.log_moment, 0.0);
    }

    #[test]
    fn pairwise_exponent_constant_q() {
        let q = CovarianceQ::constant(1.5).unwrap();
        let hp = HurstParams::new(0.25).unwrap();
        let g = TimeGrid::new(2.0, 16).unwrap();
        let paths: Vec<_> = (0..3)
            .map(|i| sample_bm(&g, &[0.0], &mut stream(4, i)).unwrap())
            .collect();
        let v = pairwise_exponent(&paths, &q, hp, QuadratureSpec::brownian(8).unwrap()).unwrap();
        assert_relative_eq!(v, 0.5 * 9.0 * 1.5 * 2f64.sqrt(), max_relative = 1e-13);
        let one =
            pairwise_exponent(&paths[..1], &q, hp, QuadratureSpec::brownian(8).unwrap()).unwrap();
        assert_relative_eq!(one, 0.5 * 1.5 * 2f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn zero_noise_solution_is_one() {
        let q = CovarianceQ::constant(0.0).unwrap();
        let hp = HurstParams::new(0.3).unwrap();
        assert_eq!(
            solution_sample(&MCConfig::new(2, 16, 3, 1, 1.0), &q, hp, 8).unwrap(),
            1.0
        );
    }

    #[test]
    fn solution_is_linear_in_constant_u0() {
        let q = CovarianceQ::fbm_spatial(0.5).unwrap();
        let hp = HurstParams::new(0.3).unwrap();
        let mut cfg = MCConfig::new(2, 16, 3, 1, 0.5);
        let a = solution_sample(&cfg, &q, hp, 8).unwrap();
        cfg.u0 = InitialData::Constant(3.0);
        let b = solution_sample(&cfg, &q, hp, 8).unwrap();
        assert_relative_eq!(b, 3.0 * a, max_relative = 1e-15);
    }

    #[test]
    fn theory_slopes() {
        assert_eq!(theory_slope_k(0.5), 3.0);
        assert_relative_eq!(theory_slope_t(0.3, 0.5), 2.2, max_relative = 1e-15);
        assert_relative_eq!(
            theta_const(1.0, 0.3),
            2.0 / (0.6 * 1.6),
            max_relative = 1e-15
        );
        assert_relative_eq!(brownian_abs_moment(1.0, 1), 1.0, max_relative = 1e-13);
        assert_relative_eq!(brownian_abs_moment(1.0, 3), 3.0, max_relative = 1e-13);
    }

    #[test]
    fn fit_rejects_nonpositive_log_moments() {
        let mk = |k: usize, lm: f64| MomentEstimate {
            log_moment: lm,
            stderr_log: 0.0,
            n_rep: 2,
            k,
            t: 1.0,
            seed: 0,
            diagnostics: MomentDiagnostics {
                max_exponent: lm,
                effective_sample_size: 2.0,
                excluded: 0,
                reliable: true,
            },
        };
        let es: Vec<_> = (1..=4).map(|k| mk(k, 0.5 * (k * k) as f64)).collect();
        let f = lyapunov_fit(&es, FitMode::VsK).unwrap();
        assert_relative_eq!(f.slope, 2.0, max_relative = 1e-12);
        assert_relative_eq!(f.r2, 1.0, max_relative = 1e-12);
        let mut bad = es.clone();
        bad[0].log_moment = -0.1;
        assert!(matches!(
            lyapunov_fit(&bad, FitMode::VsK),
            Err(Error::Fit(_))
        ));
    }
}
