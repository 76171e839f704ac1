//! One function per subcommand, each producing a [`Table`].

use std::time::Instant;

use shefk_core::analytic_bounds::{
    estimate_c_lambda, gamma_ratio_sup, lower_bound_plan, mgf_u_bound, mittag_leffler_ln,
    ml_exp_bound, running_max_mgf, MLParams,
};
use shefk_core::feynman_kac::{
    lyapunov_fit, moment_estimate, theory_slope_k, theory_slope_t, FitMode, InitialData, MCConfig,
    MomentEstimate,
};
use shefk_core::gaussian_paths::{FbmGenerator, SpaceTimeFieldSampler, SpatialFieldSampler};
use shefk_core::kernels::HurstParams;
use shefk_core::path::{SamplePath, SiteSet, TimeGrid};
use shefk_core::quadrature::QuadratureSpec;
use shefk_core::rng::{child_seed, par_map, stream};
use shefk_core::stats::covariance_stderr;
use shefk_core::stochastic_integral::{
    cov_closed_form, cov_v_approx, integral_eps, y_bhat_integral,
};

use crate::config::ExperimentConfig;
use crate::criteria::{self, Outcome, Scale};
use crate::fixtures::{fixture, node_sites};
use crate::output::{fmt_f, Table, TIMING_COLUMN};
use crate::CliError;

/// Grid steps for the running maximum inside `C_λ`.
const C_LAMBDA_GRID: usize = 1024;

/// Table with the timing column appended.
fn timed(columns: &[&str]) -> Table {
    let mut c = columns.to_vec();
    c.push(TIMING_COLUMN);
    Table::new(&c)
}

fn push_timed(table: &mut Table, seed: u64, mut cells: Vec<String>) {
    cells.push(String::new());
    table.push(seed, cells);
}

fn stamp(mut table: Table, start: Instant) -> Table {
    let col = table.column(TIMING_COLUMN).expect("timed table");
    let secs = fmt_f(start.elapsed().as_secs_f64());
    for r in &mut table.rows {
        r[col] = secs.clone();
    }
    table
}

fn hurst(cfg: &ExperimentConfig) -> shefk_core::Result<HurstParams> {
    HurstParams::new(cfg.hurst)
}

pub fn fbm(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let start = Instant::now();
    let grid = TimeGrid::new(cfg.t[0], cfg.n_steps)?;
    let gen = FbmGenerator::new(&grid, cfg.hurst)?;
    let mut table = timed(&["rep", "time", "value"]);
    for r in 0..cfg.n_rep {
        let p = gen.sample(&mut stream(cfg.seed, r as u64));
        for i in 0..grid.len() {
            push_timed(
                &mut table,
                cfg.seed,
                vec![r.to_string(), fmt_f(grid.time(i)), fmt_f(p.point(i)[0])],
            );
        }
    }
    Ok(stamp(table, start))
}

pub fn field(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let start = Instant::now();
    let grid = TimeGrid::new(cfg.t[0], cfg.n_steps)?;
    let sites = SiteSet::from_scalars(&cfg.sites)?;
    let sampler = SpaceTimeFieldSampler::new(
        &grid,
        sites.clone(),
        cfg.hurst,
        &cfg.covariance()?,
        cfg.max_cholesky,
    )?;
    let mut table = timed(&["rep", "time", "x", "value"]);
    for r in 0..cfg.n_rep {
        let w = sampler.sample(&mut stream(cfg.seed, r as u64))?;
        for i in 0..grid.len() {
            for j in 0..sites.len() {
                let cells = vec![
                    r.to_string(),
                    fmt_f(grid.time(i)),
                    fmt_f(sites.site(j)[0]),
                    fmt_f(w.at_time(i, j)),
                ];
                push_timed(&mut table, cfg.seed, cells);
            }
        }
    }
    Ok(stamp(table, start))
}

/// One estimate of `E[I(φ) I(ψ)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovEstimate {
    pub method: &'static str,
    pub value: f64,
    pub stderr: f64,
    /// Quadrature cells, or replications for the Monte Carlo routes.
    pub n: usize,
}

fn ensemble_cov(pairs: &[(f64, f64)]) -> (f64, f64) {
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    covariance_stderr(&a, &b)
}

/// Closed form, ε-approximation, and the `Y·B̂` and `W` ensembles.
///
/// The grid routes use `ε` equal to their time step.
pub fn three_way(
    cfg: &ExperimentConfig,
    phi: &SamplePath,
    psi: &SamplePath,
) -> Result<Vec<CovEstimate>, CliError> {
    let (q, hp, t) = (cfg.covariance()?, hurst(cfg)?, cfg.t[0]);
    let closed = cov_closed_form(&q, phi, psi, t, hp, QuadratureSpec::smooth(cfg.quad_cells)?)?;
    let eps = cfg.eps.unwrap_or(2f64.powi(-10));
    let delta = cfg.delta.unwrap_or(eps);
    let n_v = (8.0 * t / eps.min(delta)).ceil() as usize;
    let v = cov_v_approx(&q, phi, psi, t, hp, eps, delta, n_v)?;

    let ny = cfg.n_steps_y;
    let ys = SpatialFieldSampler::new(
        &q,
        SiteSet::from_scalars(&node_sites(&[phi, psi], t, ny))?,
        cfg.max_cholesky,
    );
    ys.jitter()?;
    let fbm = FbmGenerator::new(&TimeGrid::padded(t, ny, 1)?, cfg.hurst)?;
    let y_pairs = par_map(
        cfg.workers,
        cfg.n_rep,
        |r| -> shefk_core::Result<(f64, f64)> {
            let mut rng = stream(cfg.seed, r as u64);
            let y = ys.sample(&mut rng)?;
            let b = fbm.sample(&mut rng);
            let h = t / ny as f64;
            Ok((
                y_bhat_integral(&y, &b, phi, t, h)?,
                y_bhat_integral(&y, &b, psi, t, h)?,
            ))
        },
    )
    .into_iter()
    .collect::<shefk_core::Result<Vec<_>>>()?;

    let nw = cfg.n_steps;
    let ws = SpaceTimeFieldSampler::new(
        &TimeGrid::padded(t, nw, 1)?,
        SiteSet::from_scalars(&node_sites(&[phi, psi], t, nw))?,
        cfg.hurst,
        &q,
        cfg.max_cholesky.max(1 << 16),
    )?;
    let w_seed = child_seed(cfg.seed, 0x57);
    let w_pairs = par_map(
        cfg.workers,
        cfg.n_rep,
        |r| -> shefk_core::Result<(f64, f64)> {
            let w = ws.sample(&mut stream(w_seed, r as u64))?;
            let h = t / nw as f64;
            Ok((integral_eps(&w, phi, t, h)?, integral_eps(&w, psi, t, h)?))
        },
    )
    .into_iter()
    .collect::<shefk_core::Result<Vec<_>>>()?;

    let (cy, sy) = ensemble_cov(&y_pairs);
    let (cw, sw) = ensemble_cov(&w_pairs);
    Ok(vec![
        CovEstimate {
            method: "closed_form",
            value: closed.value,
            stderr: 0.0,
            n: cfg.quad_cells,
        },
        CovEstimate {
            method: "v_approx",
            value: v,
            stderr: 0.0,
            n: n_v,
        },
        CovEstimate {
            method: "mc_y_bhat",
            value: cy,
            stderr: sy,
            n: cfg.n_rep,
        },
        CovEstimate {
            method: "mc_w",
            value: cw,
            stderr: sw,
            n: cfg.n_rep,
        },
    ])
}

fn named_fixture(name: &str, t: f64) -> Result<SamplePath, CliError> {
    fixture(name, t).ok_or_else(|| {
        CliError::Config(format!(
            "unknown fixture `{name}`; known: {:?}",
            crate::fixtures::NAMES
        ))
    })
}

pub fn covariance(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let start = Instant::now();
    let (phi, psi) = (
        named_fixture(&cfg.phi, cfg.t[0])?,
        named_fixture(&cfg.psi, cfg.t[0])?,
    );
    let mut table = timed(&["phi", "psi", "method", "value", "stderr", "n"]);
    for e in three_way(cfg, &phi, &psi)? {
        let cells = vec![
            cfg.phi.clone(),
            cfg.psi.clone(),
            e.method.into(),
            fmt_f(e.value),
            fmt_f(e.stderr),
            e.n.to_string(),
        ];
        push_timed(&mut table, cfg.seed, cells);
    }
    Ok(stamp(table, start))
}

/// Moment estimates over the `(t, k)` grid, `t` outermost.
///
/// Every cell uses the master seed, so the cells share random numbers.
pub fn moment_grid(cfg: &ExperimentConfig) -> Result<Vec<MomentEstimate>, CliError> {
    let (q, hp) = (cfg.covariance()?, hurst(cfg)?);
    let mut out = Vec::new();
    for &t in &cfg.t {
        for &k in &cfg.k {
            let mut mc = MCConfig::new(cfg.n_rep, cfg.n_steps, cfg.seed, k, t);
            mc.x = cfg.x.clone();
            mc.u0 = InitialData::Constant(cfg.u0);
            mc.workers = cfg.workers;
            mc.work_cap = cfg.work_cap;
            out.push(moment_estimate(&mc, &q, hp)?);
        }
    }
    Ok(out)
}

pub fn moments(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let start = Instant::now();
    let alpha = cfg.covariance()?.constants().alpha;
    let mut table = timed(&[
        "t",
        "k",
        "log_moment",
        "stderr",
        "max_exponent",
        "ess",
        "excluded",
        "reliable",
        "theory_scale",
    ]);
    for e in moment_grid(cfg)? {
        let scale = if alpha < 1.0 {
            e.t.powf(theory_slope_t(cfg.hurst, alpha)) * (e.k as f64).powf(theory_slope_k(alpha))
        } else {
            f64::NAN
        };
        let d = e.diagnostics;
        let cells = vec![
            fmt_f(e.t),
            e.k.to_string(),
            fmt_f(e.log_moment),
            fmt_f(e.stderr_log),
            fmt_f(d.max_exponent),
            fmt_f(d.effective_sample_size),
            d.excluded.to_string(),
            d.reliable.to_string(),
            fmt_f(scale),
        ];
        push_timed(&mut table, cfg.seed, cells);
    }
    Ok(stamp(table, start))
}

pub fn lyapunov(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let start = Instant::now();
    if cfg.t.len() < 4 && cfg.k.len() < 4 {
        return Err(CliError::Config(
            "lyapunov needs at least 4 values of t or of k".into(),
        ));
    }
    let alpha = cfg.covariance()?.constants().alpha;
    let (th_t, th_k) = if alpha < 1.0 {
        (theory_slope_t(cfg.hurst, alpha), theory_slope_k(alpha))
    } else {
        (f64::NAN, f64::NAN)
    };
    let grid = moment_grid(cfg)?;
    let nk = cfg.k.len();
    let mut table = timed(&[
        "mode",
        "fixed",
        "slope",
        "intercept",
        "r2",
        "window_lo",
        "window_hi",
        "theory_slope",
    ]);
    let mut emit = |mode: &str,
                    fixed: f64,
                    est: &[MomentEstimate],
                    fm: FitMode,
                    theory: f64|
     -> Result<(), CliError> {
        let f = lyapunov_fit(est, fm)?;
        let cells = vec![
            mode.into(),
            fmt_f(fixed),
            fmt_f(f.slope),
            fmt_f(f.intercept),
            fmt_f(f.r2),
            fmt_f(f.window.0),
            fmt_f(f.window.1),
            fmt_f(theory),
        ];
        push_timed(&mut table, cfg.seed, cells);
        Ok(())
    };
    if cfg.t.len() >= 4 {
        for (j, &k) in cfg.k.iter().enumerate() {
            let col: Vec<MomentEstimate> = grid.iter().skip(j).step_by(nk).copied().collect();
            emit("vs_t", k as f64, &col, FitMode::VsT, th_t)?;
        }
    }
    if nk >= 4 {
        for (i, &t) in cfg.t.iter().enumerate() {
            emit("vs_k", t, &grid[i * nk..(i + 1) * nk], FitMode::VsK, th_k)?;
        }
    }
    Ok(stamp(table, start))
}

pub fn bounds(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let start = Instant::now();
    let mut table = timed(&["quantity", "p1", "p2", "p3", "value", "aux", "note"]);
    let mut row = |q: &str, p: [f64; 3], value: f64, aux: f64, note: String| {
        let cells = vec![
            q.into(),
            fmt_f(p[0]),
            fmt_f(p[1]),
            fmt_f(p[2]),
            fmt_f(value),
            fmt_f(aux),
            note,
        ];
        push_timed(&mut table, cfg.seed, cells);
    };
    let ml = MLParams::new(cfg.ml_alpha, cfg.ml_beta)?;
    for &z in &cfg.z {
        let branch = if z > ml.asymptotic_threshold {
            "asymptotic"
        } else {
            "series"
        };
        row(
            "ln_mittag_leffler",
            [cfg.ml_alpha, cfg.ml_beta, z],
            mittag_leffler_ln(&ml, z)?,
            f64::NAN,
            branch.into(),
        );
        if cfg.ml_beta <= 1.0 {
            let b = ml_exp_bound(cfg.ml_alpha, cfg.ml_beta, z)?;
            row(
                "ml_exp_bound",
                [cfg.ml_alpha, cfg.ml_beta, z],
                b.ln_bound,
                b.c,
                "value is ln bound, aux is C".into(),
            );
        }
    }
    let [a, b, u, v, w] = cfg.gamma_params[..] else {
        unreachable!("checked at load")
    };
    let g = gamma_ratio_sup(a, b, u, v, w, cfg.n_max)?;
    let dec = g
        .decreasing_from
        .map_or("none".to_string(), |n| n.to_string());
    row(
        "gamma_ratio_sup",
        [a, b, u],
        g.sup,
        g.argmax as f64,
        format!(
            "v={v};w={w};n_max={};hypothesis={};decreasing_from={dec}",
            cfg.n_max, g.hypothesis
        ),
    );
    for (i, &lambda) in cfg.lambda.iter().enumerate() {
        let bound = mgf_u_bound(lambda, cfg.alpha, cfg.dim, cfg.hurst)?;
        row(
            "mgf_u_bound",
            [lambda, cfg.alpha, cfg.hurst],
            bound,
            cfg.dim as f64,
            "aux is d".into(),
        );
        let rm = running_max_mgf(
            lambda,
            cfg.run_max_m,
            cfg.dim,
            cfg.n_rep,
            child_seed(cfg.seed, i as u64),
            cfg.n_steps,
            cfg.workers,
        )?;
        let e = rm.estimate;
        row(
            "running_max_mgf",
            [lambda, cfg.run_max_m, cfg.dim as f64],
            e.log_mean,
            e.stderr,
            format!(
                "growth={};ess={:.1};reliable={}",
                fmt_f(rm.growth),
                e.effective_sample_size,
                e.reliable
            ),
        );
    }
    Ok(stamp(table, start))
}

pub fn lowerbound(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let start = Instant::now();
    let cl = estimate_c_lambda(
        cfg.c_lambda,
        cfg.c_lambda_reps,
        cfg.seed,
        C_LAMBDA_GRID,
        cfg.workers,
    )?;
    let mut table = timed(&[
        "t",
        "k",
        "m0",
        "f_m0",
        "m0_ge_y",
        "mt_condition",
        "degenerate",
        "c_lambda",
        "c_lambda_stderr",
    ]);
    for &t in &cfg.t {
        for &k in &cfg.k {
            let p = lower_bound_plan(
                k as f64, t, cfg.hurst, cfg.beta, cfg.c_h, cfg.y, cfg.dim, cl,
            )?;
            let cells = vec![
                fmt_f(t),
                k.to_string(),
                fmt_f(p.m0),
                fmt_f(p.f_m0),
                p.m0_ge_y.to_string(),
                p.mt_condition.to_string(),
                p.degenerate.to_string(),
                fmt_f(cl.value),
                fmt_f(cl.stderr),
            ];
            push_timed(&mut table, cfg.seed, cells);
        }
    }
    Ok(stamp(table, start))
}

/// Selftest rows; no timing column, so the output is deterministic.
pub fn selftest_table(seed: u64, outcomes: &[Outcome]) -> Table {
    let mut table = Table::new(&[
        "criterion",
        "name",
        "pass",
        "observed",
        "threshold",
        "detail",
    ]);
    for o in outcomes {
        let cells = vec![
            o.id.to_string(),
            o.name.into(),
            o.pass.to_string(),
            fmt_f(o.observed),
            fmt_f(o.threshold),
            o.detail.clone(),
        ];
        table.push(seed, cells);
    }
    table
}

/// Runs every criterion; the flag is true when all pass.
pub fn selftest(cfg: &ExperimentConfig) -> Result<(Table, bool), CliError> {
    let scale = if cfg.scale == "quick" {
        Scale::Quick
    } else {
        Scale::Full
    };
    let outcomes = criteria::IDS
        .iter()
        .map(|id| criteria::run(*id, scale, cfg.seed, cfg.workers))
        .collect::<Result<Vec<_>, _>>()?;
    let ok = outcomes.iter().all(|o| o.pass);
    Ok((selftest_table(cfg.seed, &outcomes), ok))
}
