//! Special functions and closed-form bounds: Mittag-Leffler, Gamma ratios,
//! the moment generating function of `U`, the running-maximum bound and the
//! lower-bound optimization.

use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::feynman_kac::theta_const;
use crate::gaussian_paths::sample_bm;
use crate::kernels::pow_abs;
use crate::path::{dist, SamplePath, TimeGrid};
use crate::quadrature::{midpoints, singular_double, QuadratureSpec};
use crate::rng::{par_map, stream};
use crate::stats::log_mean_exp;

/// `(ln|1/Γ(x)|, sign of 1/Γ(x))`; the sign is 0 at the poles of `Γ`.
fn ln_rgamma(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (-ln_gamma(x), 1.0);
    }
    if x == x.floor() {
        return (f64::NEG_INFINITY, 0.0);
    }
    let s = (std::f64::consts::PI * x).sin();
    (
        ln_gamma(1.0 - x) + s.abs().ln() - std::f64::consts::PI.ln(),
        s.signum(),
    )
}

/// `Σ sign_i exp(l_i)` as `(ln|sum|, sign)`.
fn signed_log_sum(terms: &[(f64, f64)]) -> (f64, f64) {
    let max = terms
        .iter()
        .filter(|t| t.1 != 0.0)
        .map(|t| t.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, 0.0);
    }
    let s: f64 = terms.iter().map(|(l, sg)| sg * (l - max).exp()).sum();
    (s.abs().ln() + max, s.signum())
}

/// Parameters of `E_{α,β}` and the branch switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
    pub series_cutoff: usize,
    /// The asymptotic expansion is used for `z` above this value.
    pub asymptotic_threshold: f64,
}

impl MLParams {
    /// Threshold `(400α)^α`, roughly where the series needs 500 terms; the
    /// expansion is only valid for `α < 2`, so larger `α` always sums the series.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::domain(
                "MLParams",
                format!("need α > 0, got α = {alpha}, β = {beta}"),
            ));
        }
        let asymptotic_threshold = if alpha < 2.0 {
            (400.0 * alpha).powf(alpha)
        } else {
            f64::INFINITY
        };
        Ok(MLParams {
            alpha,
            beta,
            series_cutoff: 200_000,
            asymptotic_threshold,
        })
    }
}

/// Series branch of `E_{α,β}(z)`, `z ≥ 0`, as `(ln|E|, sign)`.
pub fn ml_series_ln(p: &MLParams, z: f64) -> Result<(f64, f64)> {
    if z == 0.0 {
        return Ok(ln_rgamma(p.beta));
    }
    let lz = z.ln();
    // the terms peak near n = z^{1/α}/α
    let n_min = ((z.powf(1.0 / p.alpha) + 1.0) / p.alpha).ceil() as usize + 2;
    let mut terms = Vec::new();
    let mut partial = f64::NEG_INFINITY;
    for n in 0..p.series_cutoff {
        let (lr, sg) = ln_rgamma(p.alpha * n as f64 + p.beta);
        let l = n as f64 * lz + lr;
        if sg != 0.0 {
            terms.push((l, sg));
            partial = partial.max(l);
        }
        if n > n_min && l < partial - 36.9 {
            return Ok(signed_log_sum(&terms));
        }
    }
    Err(Error::domain(
        "mittag_leffler",
        format!("series did not converge within {} terms", p.series_cutoff),
    ))
}

/// Asymptotic branch with three algebraic corrections, as `ln E`.
pub fn ml_asymptotic_ln(p: &MLParams, z: f64) -> Result<f64> {
    if !(p.alpha < 2.0) || !(z > 0.0) {
        return Err(Error::domain(
            "mittag_leffler",
            "asymptotic expansion needs 0 < α < 2 and z > 0",
        ));
    }
    let main = -p.alpha.ln() + (1.0 - p.beta) / p.alpha * z.ln() + z.powf(1.0 / p.alpha);
    let mut corr = 0.0;
    for k in 1..=3 {
        let (lr, sg) = ln_rgamma(p.beta - p.alpha * k as f64);
        corr -= sg * (lr - k as f64 * z.ln()).exp();
    }
    Ok(main + (corr * (-main).exp()).ln_1p())
}

/// `ln E_{α,β}(z)` for `z ≥ 0`; the value must be positive.
pub fn mittag_leffler_ln(p: &MLParams, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::domain(
            "mittag_leffler",
            format!("z must be ≥ 0, got {z}"),
        ));
    }
    if z > p.asymptotic_threshold {
        return ml_asymptotic_ln(p, z);
    }
    let (l, sg) = ml_series_ln(p, z)?;
    if sg <= 0.0 {
        return Err(Error::domain(
            "mittag_leffler",
            "value is not positive; use the raw evaluation",
        ));
    }
    Ok(l)
}

/// `E_{α,β}(z)` for `z ≥ 0`.
pub fn mittag_leffler(p: &MLParams, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::domain(
            "mittag_leffler",
            format!("z must be ≥ 0, got {z}"),
        ));
    }
    let (l, sg) = if z > p.asymptotic_threshold {
        (ml_asymptotic_ln(p, z)?, 1.0)
    } else {
        ml_series_ln(p, z)?
    };
    if l > f64::MAX.ln() {
        return Err(Error::Overflow {
            op: "mittag_leffler",
        });
    }
    Ok(sg * l.exp())
}

/// Constant `C ≥ 1` with `E_{α,β}(z) ≤ C exp(C z^{1/α})` on the scanned range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlExpBound {
    pub c: f64,
    pub ln_bound: f64,
    /// `exp(ln_bound)`; may be infinite.
    pub bound: f64,
}

/// Largest `z` scanned when fitting the constant.
pub const ML_SCAN_MAX: f64 = 1e4;

/// Fits `C` on `z = 0` and a 2000-point log grid of `[1e-6, 1e4]`, with each
/// local maximum of the implied constant refined, then evaluates the bound at `z`.
pub fn ml_exp_bound(alpha: f64, beta: f64, z: f64) -> Result<MlExpBound> {
    if beta > 1.0 {
        return Err(Error::domain(
            "ml_exp_bound",
            format!("β must be ≤ 1, got {beta}"),
        ));
    }
    if !(z >= 0.0) {
        return Err(Error::domain(
            "ml_exp_bound",
            format!("z must be ≥ 0, got {z}"),
        ));
    }
    let p = MLParams::new(alpha, beta)?;
    let implied = |zi: f64| -> Result<f64> {
        let (l, sg) = if zi > p.asymptotic_threshold {
            (ml_asymptotic_ln(&p, zi)?, 1.0)
        } else {
            ml_series_ln(&p, zi)?
        };
        Ok(if sg <= 0.0 {
            1.0
        } else {
            min_constant(zi.powf(1.0 / alpha), l)
        })
    };
    let lz: Vec<f64> = (0..2000).map(|i| -6.0 + 10.0 * i as f64 / 1999.0).collect();
    let cs: Vec<f64> = lz
        .iter()
        .map(|l| implied(10f64.powf(*l)))
        .collect::<Result<_>>()?;
    let mut c = implied(0.0)?.max(cs.iter().copied().fold(1.0, f64::max));
    // refine every interior local maximum by golden section in log z
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for i in 1..cs.len() - 1 {
        if cs[i] <= 1.0 || cs[i] < cs[i - 1] || cs[i] < cs[i + 1] {
            continue;
        }
        let (mut lo, mut hi) = (lz[i - 1], lz[i + 1]);
        for _ in 0..60 {
            let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if implied(10f64.powf(a))? > implied(10f64.powf(b))? {
                hi = b;
            } else {
                lo = a;
            }
        }
        c = c.max(implied(10f64.powf(0.5 * (lo + hi)))?);
    }
    let ln_bound = c.ln() + c * z.powf(1.0 / alpha);
    Ok(MlExpBound {
        c,
        ln_bound,
        bound: ln_bound.exp(),
    })
}

/// Smallest `C ≥ 1` with `ln C + C w ≥ target`.
fn min_constant(w: f64, target: f64) -> f64 {
    let g = |c: f64| c.ln() + c * w - target;
    if g(1.0) >= -1e-12 * target.abs().max(1.0) {
        return 1.0;
    }
    // g is concave and increasing, so Newton from the left stays left
    let mut c = 1.0;
    for _ in 0..200 {
        let step = g(c) / (1.0 / c + w);
        c -= step;
        if step.abs() <= 1e-15 * c {
            break;
        }
    }
    c * (1.0 + 1e-12)
}

/// Supremum over `n ≤ n_max` of `Γ(an+u)Γ(bn+v)/Γ((a+b)n+w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRatioReport {
    pub sup: f64,
    pub argmax: usize,
    /// `u + v ≤ w + 1/2` and `w > 1/2`.
    pub hypothesis: bool,
    pub first_term: f64,
    pub last_term: f64,
    /// Smallest `n₀` from which the terms are nonincreasing up to `n_max`.
    pub decreasing_from: Option<usize>,
}

pub fn gamma_ratio_sup(
    a: f64,
    b: f64,
    u: f64,
    v: f64,
    w: f64,
    n_max: usize,
) -> Result<GammaRatioReport> {
    if [a, b, u, v, w].iter().any(|x| !(*x > 0.0)) {
        return Err(Error::domain(
            "gamma_ratio_sup",
            "a, b, u, v, w must be positive",
        ));
    }
    let ln_terms: Vec<f64> = (0..=n_max)
        .map(|n| {
            let n = n as f64;
            ln_gamma(a * n + u) + ln_gamma(b * n + v) - ln_gamma((a + b) * n + w)
        })
        .collect();
    let (argmax, ln_sup) =
        ln_terms
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, l)| {
                if *l > best.1 {
                    (i, *l)
                } else {
                    best
                }
            });
    let mut decreasing_from = Some(n_max);
    for n in (0..n_max).rev() {
        if ln_terms[n + 1] <= ln_terms[n] {
            decreasing_from = Some(n);
        } else {
            break;
        }
    }
    if n_max == 0 {
        decreasing_from = None;
    }
    Ok(GammaRatioReport {
        sup: ln_sup.exp(),
        argmax,
        hypothesis: u + v <= w + 0.5 && w > 0.5,
        first_term: ln_terms[0].exp(),
        last_term: ln_terms[n_max].exp(),
        decreasing_from,
    })
}

/// `∫∫ |φ_u − φ_v|^{2α} |u−v|^{2H−2} du dv` over `[0,T]²`, `T` the grid end.
///
/// The factor `|u−v|^{2ακ}` (κ from `quad`) is integrated exactly with the
/// kernel; the remaining ratio is sampled at cell midpoints.
pub fn u_functional(path: &SamplePath, alpha: f64, h: f64, quad: QuadratureSpec) -> Result<f64> {
    if !(2.0 * h + alpha > 1.0) {
        return Err(Error::domain(
            "u_functional",
            format!("2H + α = {} must exceed 1", 2.0 * h + alpha),
        ));
    }
    let t = path.grid().end();
    let n = quad.n_cells;
    let x = path.sample_at(&midpoints(t, n));
    let d = path.dim();
    let p = 2.0 * alpha;
    let g = |i: usize, j: usize| {
        if d == 1 {
            pow_abs(x[i] - x[j], p)
        } else {
            pow_abs(dist(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]), p)
        }
    };
    singular_double(t, n, 2.0 * h - 2.0, p * quad.path_regularity, g)
}

/// `ln Σ_n λⁿ C_d 2^{αn} Θⁿ Γ(d/2+αn)/n!` with `C_d = 1/Γ(d/2)`, which
/// majorizes `ln E[e^{λU}]`.
pub fn mgf_u_bound(lambda: f64, alpha: f64, d: usize, h: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) || !(2.0 * h + alpha > 1.0) || d == 0 || !(lambda >= 0.0) {
        return Err(Error::domain(
            "mgf_u_bound",
            "need λ ≥ 0, α ∈ (0,1], 2H + α > 1 and d ≥ 1",
        ));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let theta = theta_const(alpha, h);
    let lc = lambda.ln() + alpha * 2f64.ln() + theta.ln();
    let hd = d as f64 / 2.0;
    if alpha == 1.0 && lc >= 0.0 {
        return Err(Error::domain(
            "mgf_u_bound",
            format!(
                "for α = 1 the majorant converges only when 2λΘ < 1; here 2λΘ = {}",
                lc.exp()
            ),
        ));
    }
    let ln_term = |n: f64| n * lc + ln_gamma(hd + alpha * n) - ln_gamma(hd) - ln_gamma(n + 1.0);
    // dlog rises near 0 before decreasing for good, so probe a doubling grid
    let dlog = |n: f64| lc + alpha * digamma(hd + alpha * n) - digamma(n + 1.0);
    let mut probe = 0.0;
    let mut rising = None;
    while probe <= 64.0 {
        if dlog(probe) > 0.0 {
            rising = Some(probe);
            break;
        }
        probe = if probe == 0.0 { 1.0 } else { 2.0 * probe };
    }
    let peak = match rising {
        None => (0..=64)
            .map(|n| n as f64)
            .max_by(|a, b| ln_term(*a).total_cmp(&ln_term(*b)))
            .unwrap_or(0.0),
        Some(start) => {
            let (mut lo, mut hi) = (start, start.max(1.0));
            while dlog(hi) > 0.0 {
                lo = hi;
                hi *= 2.0;
                if hi > 1e300 {
                    return Err(Error::Overflow { op: "mgf_u_bound" });
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if dlog(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    if peak < 1e5 {
        let mut terms = Vec::new();
        let mut top = f64::NEG_INFINITY;
        let mut n = 0usize;
        loop {
            let l = ln_term(n as f64);
            terms.push(l);
            top = top.max(l);
            if n as f64 > peak.max(64.0) && l < top - 40.0 {
                break;
            }
            n += 1;
            if n > 10_000_000 {
                return Err(Error::domain(
                    "mgf_u_bound",
                    "majorant series converges too slowly",
                ));
            }
        }
        return Ok(crate::stats::log_sum_exp(&terms));
    }
    // terms vary on a scale ≫ 1 around the peak: trapezoid in n
    let width = (peak / (1.0 - alpha).max(1e-12)).sqrt();
    let (lo, hi) = ((peak - 60.0 * width).max(0.0), peak + 60.0 * width);
    let m = 4000;
    let step = (hi - lo) / m as f64;
    let vals: Vec<f64> = (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            ln_term(lo + i as f64 * step) + (w * step).ln()
        })
        .collect();
    Ok(crate::stats::log_sum_exp(&vals))
}

/// Log-domain Monte Carlo estimate with health diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEstimate {
    pub log_mean: f64,
    pub stderr: f64,
    pub effective_sample_size: f64,
    pub n_rep: usize,
    /// False when the ESS falls below 0.5% of the replications.
    pub reliable: bool,
}

fn log_estimate(xs: &[f64]) -> LogEstimate {
    let lm = log_mean_exp(xs);
    LogEstimate {
        log_mean: lm.log_mean,
        stderr: lm.stderr,
        effective_sample_size: lm.ess,
        n_rep: xs.len(),
        reliable: lm.ess >= 0.005 * xs.len() as f64,
    }
}

/// `sup_i |B_{t_i}|` over a Brownian path on `n_grid` steps of `[0, horizon]`.
fn running_max(horizon: f64, n_grid: usize, d: usize, seed: u64, rep: u64) -> Result<f64> {
    let grid = TimeGrid::new(horizon, n_grid)?;
    Ok(sample_bm(&grid, &vec![0.0; d], &mut stream(seed, rep))?.sup_norm())
}

/// Monte Carlo `ln E[exp(λ(1+W)^M)]`, `W = sup_{[0,1]}|B|`, with the
/// growth scale `λ^{2/(2−M)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMaxEstimate {
    pub estimate: LogEstimate,
    pub growth: f64,
}

pub fn running_max_mgf(
    lambda: f64,
    m: f64,
    d: usize,
    n_rep: usize,
    seed: u64,
    n_grid: usize,
    workers: usize,
) -> Result<RunMaxEstimate> {
    if !(lambda >= 0.0) || !(0.0..2.0).contains(&m) || d == 0 || n_rep < 2 {
        return Err(Error::domain(
            "running_max_mgf",
            "need λ ≥ 0, M ∈ [0,2), d ≥ 1, n_rep ≥ 2",
        ));
    }
    let xs: Vec<f64> = par_map(workers, n_rep, |r| {
        running_max(1.0, n_grid, d, seed, r as u64).map(|w| lambda * (1.0 + w).powf(m))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(RunMaxEstimate {
        estimate: log_estimate(&xs),
        growth: lambda.powf(2.0 / (2.0 - m)),
    })
}

/// Monte Carlo `ln E[e^{λU}]` over Brownian paths on `[0,1]`.
#[allow(clippy::too_many_arguments)]
pub fn mgf_u_monte_carlo(
    lambda: f64,
    alpha: f64,
    d: usize,
    h: f64,
    n_rep: usize,
    n_cells: usize,
    seed: u64,
    workers: usize,
) -> Result<LogEstimate> {
    let quad = QuadratureSpec::brownian(n_cells)?;
    let grid = TimeGrid::new(1.0, 2 * n_cells)?;
    let xs: Vec<f64> = par_map(workers, n_rep, |r| {
        let b = sample_bm(&grid, &vec![0.0; d], &mut stream(seed, r as u64))?;
        Ok(lambda * u_functional(&b, alpha, h, quad)?)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(log_estimate(&xs))
}

/// Monte Carlo estimate of `C_λ = E exp(λ sup_{[0,1/2]}|B|²)` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CLambda {
    pub lambda: f64,
    pub value: f64,
    pub stderr: f64,
}

pub fn estimate_c_lambda(
    lambda: f64,
    n_rep: usize,
    seed: u64,
    n_grid: usize,
    workers: usize,
) -> Result<CLambda> {
    if !(lambda > 0.0 && lambda < 1.0) || n_rep < 2 {
        return Err(Error::domain(
            "estimate_c_lambda",
            "need λ ∈ (0,1) and n_rep ≥ 2",
        ));
    }
    let xs: Vec<f64> = par_map(workers, n_rep, |r| {
        running_max(0.5, n_grid, 1, seed, r as u64).map(|w| (lambda * w * w).exp())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let (value, stderr) = crate::stats::mean_stderr(&xs);
    Ok(CLambda {
        lambda,
        value,
        stderr,
    })
}

/// Optimizer of `f(M) = C_H k² M^{2β} t^{2H} − 16kM²/t` and the side
/// conditions under which it yields a moment lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundPlan {
    pub m0: f64,
    pub f_m0: f64,
    pub k: f64,
    pub t: f64,
    pub h: f64,
    pub beta: f64,
    pub c_h: f64,
    /// `M₀ ≥ |y|`.
    pub m0_ge_y: bool,
    /// `(1 − C_λ e^{−4λM₀²/t})^{kd} ≥ 1/2`.
    pub mt_condition: bool,
    /// `β = 0`: the optimizer degenerates to `M₀ = 0`.
    pub degenerate: bool,
}

pub fn lower_bound_objective(m: f64, k: f64, t: f64, h: f64, beta: f64, c_h: f64) -> f64 {
    c_h * k * k * pow_abs(m, 2.0 * beta) * t.powf(2.0 * h) - 16.0 * k * m * m / t
}

#[allow(clippy::too_many_arguments)]
pub fn lower_bound_plan(
    k: f64,
    t: f64,
    h: f64,
    beta: f64,
    c_h: f64,
    y: f64,
    d: usize,
    c_lambda: CLambda,
) -> Result<LowerBoundPlan> {
    if !(0.0..1.0).contains(&beta) || !(c_h > 0.0) || !(k > 0.0) || !(t > 0.0) || d == 0 {
        return Err(Error::domain(
            "lower_bound_plan",
            "need β ∈ [0,1), C_H > 0, k > 0, t > 0, d ≥ 1",
        ));
    }
    let (m0, f_m0, degenerate) = if beta == 0.0 {
        (0.0, 0.0, true)
    } else {
        let m0 = (beta * k * c_h * t.powf(1.0 + 2.0 * h) / 16.0).powf(1.0 / (2.0 * (1.0 - beta)));
        let f_m0 = 16f64.powf(beta / (beta - 1.0))
            * (1.0 - beta)
            * beta.powf(beta / (1.0 - beta))
            * c_h.powf(1.0 / (1.0 - beta))
            * k.powf((2.0 - beta) / (1.0 - beta))
            * t.powf((beta + 2.0 * h) / (1.0 - beta));
        (m0, f_m0, false)
    };
    let tail = c_lambda.value * (-4.0 * c_lambda.lambda * m0 * m0 / t).exp();
    let mt_condition = tail < 1.0 && (1.0 - tail).powf(k * d as f64) >= 0.5;
    Ok(LowerBoundPlan {
        m0,
        f_m0,
        k,
        t,
        h,
        beta,
        c_h,
        m0_ge_y: m0 >= y.abs(),
        mt_condition,
        degenerate,
    })
}

/// Exact variance of `∫₀ᵃ f dB̂` for a step function against its
/// `L^{1/H}` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1hCheck {
    pub variance: f64,
    pub l1h_norm: f64,
    /// `variance / l1h_norm²`.
    pub ratio: f64,
}

/// `f[i]` is the value on the `i`-th of `f.len()` equal cells of `[0,a]`.
pub fn l1h_lower_check(f: &[f64], a: f64, h: f64) -> Result<L1hCheck> {
    if f.is_empty() || !(a > 0.0) || !(h > 0.0 && h < 1.0) {
        return Err(Error::domain(
            "l1h_lower_check",
            "need a nonempty step function, a > 0, H ∈ (0,1)",
        ));
    }
    let n = f.len();
    let dt = a / n as f64;
    let p = 2.0 * h;
    let scale = dt.powf(p);
    let gamma: Vec<f64> = (0..n)
        .map(|k| {
            let k = k as f64;
            0.5 * scale * (pow_abs(k + 1.0, p) - 2.0 * pow_abs(k, p) + pow_abs(k - 1.0, p))
        })
        .collect();
    let mut variance = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| gamma[i.abs_diff(j)] * f[j]).sum();
        variance += f[i] * row;
    }
    let l1h_norm = (f.iter().map(|v| pow_abs(*v, 1.0 / h)).sum::<f64>() * dt).powf(h);
    Ok(L1hCheck {
        variance,
        l1h_norm,
        ratio: variance / (l1h_norm * l1h_norm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mittag_leffler_closed_forms() {
        let p = MLParams::new(1.0, 1.0).unwrap();
        assert_relative_eq!(
            mittag_leffler(&p, 1.0).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-13
        );
        let p = MLParams::new(2.0, 1.0).unwrap();
        assert_relative_eq!(
            mittag_leffler(&p, 1.0).unwrap(),
            1f64.cosh(),
            max_relative = 1e-13
        );
        let p = MLParams::new(0.7, 0.4).unwrap();
        assert_relative_eq!(
            mittag_leffler(&p, 0.0).unwrap(),
            1.0 / statrs::function::gamma::gamma(0.4),
            max_relative = 1e-13
        );
    }

    #[test]
    fn e_half_has_erfc_form() {
        // E_{1/2,1}(z) = exp(z²) erfc(−z), reference values at 30 digits
        let p = MLParams::new(0.5, 1.0).unwrap();
        for (z, want) in [
            (0.3, 1.4537492328427656),
            (1.0, 5.0089800807622835),
            (2.5, 1035.8148429726229),
        ] {
            assert_relative_eq!(mittag_leffler(&p, z).unwrap(), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn ml_overflow_is_reported() {
        let p = MLParams::new(1.0, 1.0).unwrap();
        assert!(matches!(
            mittag_leffler(&p, 800.0),
            Err(Error::Overflow { .. })
        ));
        assert_relative_eq!(
            mittag_leffler_ln(&p, 800.0).unwrap(),
            800.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn exp_bound_for_exponential_is_one() {
        let b = ml_exp_bound(1.0, 1.0, 3.0).unwrap();
        assert_relative_eq!(b.c, 1.0, max_relative = 1e-9);
        assert!(ml_exp_bound(0.5, 1.5, 1.0).is_err());
    }

    #[test]
    fn gamma_ratio_first_term() {
        let r = gamma_ratio_sup(1.0, 1.0, 1.0, 1.0, 1.5, 0).unwrap();
        assert_relative_eq!(r.sup, std::f64::consts::FRAC_2_SQRT_PI, epsilon = 1e-12);
        assert_relative_eq!(
            r.first_term,
            2.0 / std::f64::consts::PI.sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn u_functional_linear_path() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let p = SamplePath::from_fn(g, |s| s);
        let h = 0.3;
        let v = u_functional(&p, 1.0, h, QuadratureSpec::smooth(32).unwrap()).unwrap();
        assert_relative_eq!(
            v,
            2.0 / ((2.0 * h + 1.0) * (2.0 * h + 2.0)),
            max_relative = 1e-12
        );
        let zero = SamplePath::from_fn(TimeGrid::new(1.0, 4).unwrap(), |_| 0.0);
        assert_eq!(
            u_functional(&zero, 0.8, h, QuadratureSpec::brownian(8).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn mgf_bound_basics() {
        assert_eq!(mgf_u_bound(0.0, 0.8, 1, 0.3).unwrap(), 0.0);
        assert!(mgf_u_bound(10.0, 1.0, 1, 0.3).is_err());
        // α = 1, d = 2: Σ (2λΘ)ⁿ = 1/(1 − 2λΘ)
        let theta = theta_const(1.0, 0.3);
        let lam = 0.1;
        assert_relative_eq!(
            mgf_u_bound(lam, 1.0, 2, 0.3).unwrap(),
            -(1.0 - 2.0 * lam * theta).ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn lower_bound_worked_case() {
        let cl = CLambda {
            lambda: 0.25,
            value: 1.2,
            stderr: 0.0,
        };
        let plan = lower_bound_plan(2.0, 1.0, 0.25, 0.5, 1.0, 0.0, 1, cl).unwrap();
        assert_relative_eq!(plan.m0, 0.0625, max_relative = 1e-14);
        assert_relative_eq!(plan.f_m0, 0.125, max_relative = 1e-14);
        assert_relative_eq!(
            lower_bound_objective(1.0 / 16.0, 2.0, 1.0, 0.25, 0.5, 1.0),
            0.125,
            max_relative = 1e-14
        );
        let deg = lower_bound_plan(2.0, 1.0, 0.25, 0.0, 1.0, 0.0, 1, cl).unwrap();
        assert!(deg.degenerate && deg.m0 == 0.0 && deg.f_m0 == 0.0);
    }

    #[test]
    fn l1h_constant_function() {
        let r = l1h_lower_check(&[1.0; 16], 1.0, 0.3).unwrap();
        assert_relative_eq!(r.variance, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.l1h_norm, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.ratio, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn running_max_trivial_cases() {
        let a = running_max_mgf(0.0, 1.0, 1, 10, 1, 64, 1).unwrap();
        assert_eq!(a.estimate.log_mean, 0.0);
        let b = running_max_mgf(0.7, 0.0, 1, 10, 1, 64, 1).unwrap();
        assert_eq!(b.estimate.log_mean, 0.7);
    }
}
