//! The ε-approximation integral `∫ W(ds, φ_s)`, its second moment and bounds.

use crate::error::{Error, Result};
use crate::gaussian_paths::GaussianFieldSample;
use crate::kernels::{
    fbm_q, holder_norm, pow_abs, v_kernel, CovarianceQ, HurstParams, QConstants, QKind,
};
use crate::path::{PathKind, SamplePath, TimeGrid};
use crate::quadrature::{midpoints, power_cell_weights, singular_double, QuadratureSpec};

/// Second moment `E[I(φ)I(ψ)]` split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovResult {
    pub value: f64,
    /// `H ∫ θ^{2H−1}[Q(φ_θ,ψ_θ) + Q(φ_{t−θ},ψ_{t−θ})] dθ`.
    pub term_diag: f64,
    /// `(|α_H|/2) ∫∫ |u−v|^{2H−2} Q̂(u,v,φ,ψ) du dv`.
    pub term_rect: f64,
    pub quad: QuadratureSpec,
    /// False when `ακ + H > 1/2` is not known to hold pathwise, either because
    /// a path is Brownian (κ < 1/2 only) or the declared κ is too small.
    pub pathwise_hypothesis: bool,
}

/// `Q(x_i, y_j)` for all `i, j`, row-major, over scalar or vector points.
fn cross_matrix(q: &CovarianceQ, xs: &[f64], ys: &[f64], d: usize) -> Result<Vec<f64>> {
    let n = xs.len() / d;
    let m = ys.len() / d;
    let mut out = vec![0.0; n * m];
    match q.kind() {
        QKind::Constant(c) => out.iter_mut().for_each(|v| *v = *c),
        QKind::FbmSpatial { theta } if d == 1 => {
            let p = 2.0 * theta;
            for i in 0..n {
                for j in 0..m {
                    out[i * m + j] = fbm_q(xs[i], ys[j], p);
                }
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..m {
                    out[i * m + j] = q.eval(&xs[i * d..(i + 1) * d], &ys[j * d..(j + 1) * d])?;
                }
            }
        }
    }
    Ok(out)
}

fn check_pair(phi: &SamplePath, psi: &SamplePath, t: f64, op: &'static str) -> Result<usize> {
    if phi.dim() != psi.dim() {
        return Err(Error::domain(op, "paths have different dimensions"));
    }
    if !(t > 0.0) {
        return Err(Error::domain(op, format!("t must be positive, got {t}")));
    }
    Ok(phi.dim())
}

/// Product-integration evaluation of the closed-form second moment.
pub fn cov_closed_form(
    q: &CovarianceQ,
    phi: &SamplePath,
    psi: &SamplePath,
    t: f64,
    hp: HurstParams,
    quad: QuadratureSpec,
) -> Result<CovResult> {
    let d = check_pair(phi, psi, t, "cov_closed_form")?;
    let h = hp.h();
    let n = quad.n_cells;
    let mids = midpoints(t, n);
    let x = phi.sample_at(&mids);
    let y = psi.sample_at(&mids);

    let diag_q: Vec<f64> = match q.kind() {
        QKind::Constant(c) => vec![*c; n],
        _ => (0..n)
            .map(|i| q.eval(&x[i * d..(i + 1) * d], &y[i * d..(i + 1) * d]))
            .collect::<Result<_>>()?,
    };
    let w = power_cell_weights(t, n, 2.0 * h - 1.0);
    let term_diag = h
        * (0..n)
            .map(|i| w[i] * (diag_q[i] + diag_q[n - 1 - i]))
            .sum::<f64>();

    let alpha = q.constants().alpha;
    let kappa = quad.path_regularity;
    let brownian = [phi, psi].iter().any(|p| p.kind() == PathKind::Brownian);
    let pathwise_hypothesis = !brownian && alpha * kappa + h > 0.5;

    let term_rect = if q.is_constant() {
        0.0
    } else {
        let c = cross_matrix(q, &x, &y, d)?;
        let qhat =
            |i: usize, j: usize| 0.5 * (c[i * n + i] + c[j * n + j] - c[i * n + j] - c[j * n + i]);
        let integral = singular_double(t, n, 2.0 * h - 2.0, 2.0 * alpha * kappa, qhat)?;
        0.5 * hp.alpha_h().abs() * integral
    };
    Ok(CovResult {
        value: term_diag + term_rect,
        term_diag,
        term_rect,
        quad,
        pathwise_hypothesis,
    })
}

/// Midpoint double Riemann sum of `½ Q(φ_u,ψ_v) V_{ε,δ}(u−v)` over `[0,t]²`.
///
/// This is `E[I_ε(φ) I_δ(ψ)]` for the smoothed integrals; the factor ½
/// comes from the double difference of `R_H`.
#[allow(clippy::too_many_arguments)]
pub fn cov_v_approx(
    q: &CovarianceQ,
    phi: &SamplePath,
    psi: &SamplePath,
    t: f64,
    hp: HurstParams,
    eps: f64,
    delta: f64,
    n_cells: usize,
) -> Result<f64> {
    let d = check_pair(phi, psi, t, "cov_v_approx")?;
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::domain("cov_v_approx", "ε and δ must be positive"));
    }
    let mids = midpoints(t, n_cells);
    let step = t / n_cells as f64;
    let weights = vec![step; n_cells];
    let lag_v: Vec<f64> = (0..n_cells)
        .map(|m| v_kernel(m as f64 * step, eps, delta, hp.h()))
        .collect();
    weighted_v_sum(q, phi, psi, &mids, &weights, &lag_v, d)
}

/// `½ Σ_{i,j} w_i w_j Q(φ(s_i), ψ(s_j)) V(s_i − s_j)` on equally spaced `s`.
fn weighted_v_sum(
    q: &CovarianceQ,
    phi: &SamplePath,
    psi: &SamplePath,
    s: &[f64],
    w: &[f64],
    lag_v: &[f64],
    d: usize,
) -> Result<f64> {
    let n = s.len();
    let x = phi.sample_at(s);
    let y = psi.sample_at(s);
    let mut total = 0.0;
    if let QKind::FbmSpatial { theta } = q.kind() {
        if d != 1 {
            return Err(Error::domain(
                "q_eval",
                "fbm_spatial covariance is defined for d = 1 only",
            ));
        }
        let p = 2.0 * theta;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += w[j] * fbm_q(x[i], y[j], p) * lag_v[i.abs_diff(j)];
            }
            total += w[i] * row;
        }
    } else {
        let c = cross_matrix(q, &x, &y, d)?;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += w[j] * c[i * n + j] * lag_v[i.abs_diff(j)];
            }
            total += w[i] * row;
        }
    }
    Ok(0.5 * total)
}

/// Exact covariance of the grid estimators [`integral_eps`] and
/// [`y_bhat_integral`] with Riemann step `step` and smoothing `ε`.
pub fn eps_estimator_cov(
    q: &CovarianceQ,
    phi: &SamplePath,
    psi: &SamplePath,
    t: f64,
    hurst: f64,
    eps: f64,
    step: f64,
) -> Result<f64> {
    let d = check_pair(phi, psi, t, "eps_estimator_cov")?;
    let (s, w) = riemann_rule(t, step, "eps_estimator_cov")?;
    let lag_v: Vec<f64> = (0..s.len())
        .map(|m| v_kernel(m as f64 * step, eps, eps, hurst))
        .collect();
    weighted_v_sum(q, phi, psi, &s, &w, &lag_v, d)
}

/// Trapezoid nodes `s_i = i·step` on `[0,t]` and their weights.
pub fn riemann_rule(t: f64, step: f64, op: &'static str) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = (t / step).round();
    if n < 1.0 || (n * step - t).abs() > 1e-9 * t {
        return Err(Error::domain(
            op,
            format!("t = {t} is not a whole number of steps {step}"),
        ));
    }
    let n = n as usize;
    let s = (0..=n).map(|i| i as f64 * step).collect();
    let w = (0..=n)
        .map(|i| if i == 0 || i == n { 0.5 * step } else { step })
        .collect();
    Ok((s, w))
}

/// Whole number of grid steps in `ε`, or a domain error.
fn eps_steps(eps: f64, step: f64, op: &'static str) -> Result<usize> {
    let q = (eps / step).round();
    if !(eps > 0.0) || q < 1.0 || (q * step - eps).abs() > 1e-9 * eps {
        return Err(Error::domain(
            op,
            format!("ε = {eps} must be a positive integer multiple of the grid step {step}"),
        ));
    }
    Ok(q as usize)
}

fn shifted(grid: &TimeGrid, s: f64, q: usize, op: &'static str) -> Result<(usize, usize)> {
    let i = grid.index_of(s).ok_or_else(|| Error::Coverage {
        op,
        msg: format!("time {s} is not a grid point"),
    })?;
    if i < q || i + q >= grid.len() {
        return Err(Error::Coverage {
            op,
            msg: format!("grid does not cover [{s} − ε, {s} + ε]"),
        });
    }
    Ok((i - q, i + q))
}

/// Trapezoid sum of `(2ε)^{−1}(W(s+ε, φ_s) − W(s−ε, φ_s))` over `[0,t]`,
/// with the Riemann step equal to the field's time step.
pub fn integral_eps(w: &GaussianFieldSample, phi: &SamplePath, t: f64, eps: f64) -> Result<f64> {
    const OP: &str = "integral_eps";
    let grid = w
        .grid()
        .ok_or_else(|| Error::domain(OP, "field has no time grid"))?;
    let step = grid.step();
    let q = eps_steps(eps, step, OP)?;
    let (s, wt) = riemann_rule(t, step, OP)?;
    let mut x = vec![0.0; phi.dim()];
    let mut sum = 0.0;
    for (si, wi) in s.iter().zip(&wt) {
        let (lo, hi) = shifted(grid, *si, q, OP)?;
        phi.at_into(*si, &mut x);
        let j = w.site_index(&x, OP)?;
        sum += wi * (w.at_time(hi, j) - w.at_time(lo, j));
    }
    Ok(sum / (2.0 * eps))
}

/// Trapezoid sum of `(2ε)^{−1} Y(φ_s)(B̂_{s+ε} − B̂_{s−ε})` over `[0,t]`,
/// with the Riemann step equal to the step of `bhat`.
pub fn y_bhat_integral(
    y: &GaussianFieldSample,
    bhat: &SamplePath,
    phi: &SamplePath,
    t: f64,
    eps: f64,
) -> Result<f64> {
    const OP: &str = "y_bhat_integral";
    let grid = bhat.grid();
    let step = grid.step();
    let q = eps_steps(eps, step, OP)?;
    let (s, wt) = riemann_rule(t, step, OP)?;
    let mut x = vec![0.0; phi.dim()];
    let mut sum = 0.0;
    for (si, wi) in s.iter().zip(&wt) {
        let (lo, hi) = shifted(grid, *si, q, OP)?;
        phi.at_into(*si, &mut x);
        let j = y.site_index(&x, OP)?;
        sum += wi * y.at(j) * (bhat.point(hi)[0] - bhat.point(lo)[0]);
    }
    Ok(sum / (2.0 * eps))
}

/// Right-hand side of the second-moment bound from the declared constants
/// and given path norms.
pub fn moment_bound_from_norms(
    k: QConstants,
    hp: HurstParams,
    kappa: f64,
    t: f64,
    holder: (f64, f64),
    sup: f64,
) -> Result<f64> {
    let h = hp.h();
    let e = h + k.alpha * kappa;
    if !(2.0 * e - 1.0 > 0.0) {
        return Err(Error::domain(
            "moment_bound",
            format!("ακ + H = {e} must exceed 1/2"),
        ));
    }
    let c = h * (1.0 - 2.0 * h) * k.c0 * holder.0.powf(k.alpha) * holder.1.powf(k.alpha)
        / (2.0 * e * (2.0 * e - 1.0));
    let c_star = k.c1 * (1.0 + sup).powf(2.0 * k.alpha);
    Ok(c * t.powf(2.0 * e) + c_star * t.powf(2.0 * h))
}

/// [`moment_bound_from_norms`] with grid estimates of the path norms.
pub fn moment_bound(
    q: &CovarianceQ,
    phi: &SamplePath,
    psi: &SamplePath,
    t: f64,
    hp: HurstParams,
    kappa: f64,
) -> Result<f64> {
    let holder = (holder_norm(phi, kappa)?, holder_norm(psi, kappa)?);
    let sup = phi.sup_norm().max(psi.sup_norm());
    moment_bound_from_norms(q.constants(), hp, kappa, t, holder, sup)
}

/// `C′(1+‖φ‖_∞)^{2α}(t−s)^{2H} + C″‖φ‖_κ^{2α}(t−s)^{2(H+ακ)}`.
#[allow(clippy::too_many_arguments)]
pub fn holder_increment_rhs(
    phi: &SamplePath,
    s: f64,
    t: f64,
    hp: HurstParams,
    alpha: f64,
    kappa: f64,
    c_prime: f64,
    c_second: f64,
) -> Result<f64> {
    if !(0.0 <= s && s <= t) {
        return Err(Error::domain(
            "holder_increment_rhs",
            format!("need 0 ≤ s ≤ t, got s = {s}, t = {t}"),
        ));
    }
    let h = hp.h();
    if !(alpha * kappa + h > 0.5) {
        return Err(Error::domain(
            "holder_increment_rhs",
            "ακ + H must exceed 1/2",
        ));
    }
    let dt = t - s;
    let sup = phi.sup_norm();
    let hn = holder_norm(phi, kappa)?;
    Ok(
        c_prime * (1.0 + sup).powf(2.0 * alpha) * pow_abs(dt, 2.0 * h)
            + c_second * hn.powf(2.0 * alpha) * pow_abs(dt, 2.0 * (h + alpha * kappa)),
    )
}
