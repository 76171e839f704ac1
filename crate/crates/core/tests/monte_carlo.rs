use shefk_core::analytic_bounds::{mgf_u_bound, mgf_u_monte_carlo, running_max_mgf};
use shefk_core::feynman_kac::{
    lyapunov_fit, moment_estimate, scaling_check, FitMode, MCConfig, NoiseModel, SolutionSampler,
};
use shefk_core::gaussian_paths::sample_bm;
use shefk_core::kernels::{CovarianceQ, HurstParams};
use shefk_core::path::{SamplePath, TimeGrid};
use shefk_core::rng::{par_map, stream};
use shefk_core::stats::{ks_normal, mean_stderr, ols};
use shefk_core::stochastic_integral::eps_estimator_cov;

#[test]
fn u_scales_with_time() {
    let hp = HurstParams::new(0.3).unwrap();
    let rep = scaling_check(0.8, hp, 2.0, 4000, 17, 32, 4).unwrap();
    for d in rep.rel_discrepancy {
        assert!(d.abs() < 1e-9, "{:?}", rep.rel_discrepancy);
    }
    let want = 2f64.powf(rep.exponent);
    assert!(
        (rep.first_moment_ratio - want).abs() <= 5.0 * rep.ratio_stderr,
        "{} vs {want}",
        rep.first_moment_ratio
    );
    assert!((rep.mean_t - rep.exact_mean_t).abs() <= 5.0 * rep.stderr_t);
    // α = 1: E[U] = Θ·E|B₁|² = Θ
    let rep = scaling_check(1.0, hp, 1.0, 20_000, 18, 32, 4).unwrap();
    assert!(
        (rep.mean_t - rep.exact_mean_t).abs() <= 5.0 * rep.stderr_t,
        "{} vs {}",
        rep.mean_t,
        rep.exact_mean_t
    );
}

/// Exact variance of the grid estimator for the constant path at `x`.
fn frozen_variance(q: &CovarianceQ, t: f64, n: usize, h: f64) -> f64 {
    let p = SamplePath::from_fn(TimeGrid::new(t, n).unwrap(), |_| 0.5);
    let step = t / n as f64;
    eps_estimator_cov(q, &p, &p, t, h, step, step).unwrap()
}

#[test]
fn constant_q_nested_sampler_is_lognormal() {
    let q = CovarianceQ::constant(1.0).unwrap();
    let hp = HurstParams::new(0.3).unwrap();
    let mut cfg = MCConfig::new(20_000, 64, 5, 1, 1.0);
    cfg.x = vec![0.5];
    cfg.workers = 4;
    let us = SolutionSampler::new(&cfg, &q, hp, 1, 1.0)
        .unwrap()
        .ensemble()
        .unwrap();
    let logs: Vec<f64> = us.iter().map(|u| u.ln()).collect();
    let v = frozen_variance(&q, 1.0, 64, 0.3);
    assert!(ks_normal(&logs, v.sqrt()).1 > 0.01);
}

#[test]
fn factorized_noise_has_chi_square_exponential_moment() {
    // I = Y·G with Y ~ N(0,c), G ~ N(0,v): E e^I = (1 − cv)^{−1/2}
    let c = 0.25;
    let q = CovarianceQ::constant(c).unwrap();
    let hp = HurstParams::new(0.3).unwrap();
    let mut cfg = MCConfig::new(40_000, 32, 6, 1, 1.0);
    cfg.x = vec![0.5];
    cfg.workers = 4;
    let s = SolutionSampler::with_noise(&cfg, &q, hp, 1, 1.0, NoiseModel::Factorized).unwrap();
    let (m, se) = mean_stderr(&s.ensemble().unwrap());
    let v = frozen_variance(&CovarianceQ::constant(1.0).unwrap(), 1.0, 32, 0.3);
    let want = (1.0 - c * v).powf(-0.5);
    assert!((m - want).abs() <= 5.0 * se, "{m} vs {want} ± {se}");
    // strictly above the Gaussian value exp(cv/2)
    assert!(want > (0.5 * c * v).exp() * 1.01);
}

/// For Gaussian noise the nested scheme's moments are
/// `E_B exp(½ ΣΣ Cov[I_ε(φ_i) I_ε(φ_j)])` over the same snapped, reversed grid
/// paths; the ε = h estimator covariance replaces the limit covariance.
#[test]
fn nested_estimator_matches_its_discrete_moment_formula() {
    let q = CovarianceQ::fbm_spatial(0.5).unwrap();
    let hp = HurstParams::new(0.3).unwrap();
    let (n, t) = (32, 1.0);
    let step = t / n as f64;
    let mut cfg = MCConfig::new(4000, n, 23, 1, t);
    cfg.workers = 4;
    let sampler = SolutionSampler::new(&cfg, &q, hp, 8, step).unwrap();
    let inner: Vec<Vec<f64>> = par_map(4, cfg.n_rep, |r| sampler.inner_terms(r as u64).unwrap());
    // unbiased per-draw estimates of u and of u² (off-diagonal inner pairs)
    let first: Vec<f64> = inner
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let second: Vec<f64> = inner
        .iter()
        .map(|v| {
            let s: f64 = v.iter().sum();
            let s2: f64 = v.iter().map(|x| x * x).sum();
            (s * s - s2) / (v.len() * (v.len() - 1)) as f64
        })
        .collect();
    let grid = TimeGrid::new(t, n).unwrap();
    let snapped = |seed: u64, r: u64| {
        let b = sample_bm(&grid, &[0.0], &mut stream(seed, r)).unwrap();
        b.reversed().map_values(|v| (v / step).round() * step)
    };
    let cov = |a: &SamplePath, b: &SamplePath| {
        eps_estimator_cov(&q, a, b, t, hp.h(), step, step).unwrap()
    };
    let oracle = |k: usize| {
        let exps = par_map(4, 8000, |r| {
            let paths: Vec<SamplePath> =
                (0..k).map(|j| snapped(1000 + j as u64, r as u64)).collect();
            let mut s = 0.0;
            for a in &paths {
                for b in &paths {
                    s += cov(a, b);
                }
            }
            0.5 * s
        });
        let lm = shefk_core::stats::log_mean_exp(&exps);
        (lm.log_mean, lm.stderr)
    };
    for (k, xs) in [(1usize, first), (2, second)] {
        let (m, se) = mean_stderr(&xs);
        let (lm, lse) = (m.ln(), se / m);
        let (want, wse) = oracle(k);
        cfg.k = k;
        let limit = moment_estimate(&cfg, &q, hp).unwrap();
        println!("k = {k}: nested {lm:.4} ± {lse:.4}, discrete formula {want:.4} ± {wse:.4}, ε → 0 limit {:.4}", limit.log_moment);
        assert!((lm - want).abs() <= 5.0 * (lse * lse + wse * wse).sqrt());
        // the ε = h estimator loses the sub-ε rectangle mass
        assert!(want < limit.log_moment);
    }
}

#[test]
fn moments_grow_in_k_and_t() {
    let q = CovarianceQ::fbm_spatial(0.5).unwrap();
    let hp = HurstParams::new(0.3).unwrap();
    let mut ests = Vec::new();
    for k in [2usize, 3, 4, 5] {
        let mut cfg = MCConfig::new(2000, 32, 41, k, 1.0);
        cfg.workers = 4;
        ests.push(moment_estimate(&cfg, &q, hp).unwrap());
    }
    assert!(ests.windows(2).all(|w| w[1].log_moment > w[0].log_moment));
    let fit = lyapunov_fit(&ests, FitMode::VsK).unwrap();
    println!("slope vs k at t = 1: {:.3} (r² {:.4})", fit.slope, fit.r2);
    assert!(fit.slope > 1.0);
    let mut by_t = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let mut cfg = MCConfig::new(2000, 32, 43, 3, t);
        cfg.workers = 4;
        by_t.push(moment_estimate(&cfg, &q, hp).unwrap().log_moment);
    }
    assert!(by_t.windows(2).all(|w| w[1] > w[0]), "{by_t:?}");
}

#[test]
fn constant_q_fit_recovers_exact_slopes() {
    let q = CovarianceQ::constant(1.0).unwrap();
    let hp = HurstParams::new(0.3).unwrap();
    let by_k: Vec<_> = (1..=5)
        .map(|k| moment_estimate(&MCConfig::new(10, 8, 1, k, 1.5), &q, hp).unwrap())
        .collect();
    let by_t: Vec<_> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|t| moment_estimate(&MCConfig::new(10, 8, 1, 2, *t), &q, hp).unwrap())
        .collect();
    let fk = lyapunov_fit(&by_k, FitMode::VsK).unwrap();
    let ft = lyapunov_fit(&by_t, FitMode::VsT).unwrap();
    assert!((fk.slope - 2.0).abs() < 1e-12 && (fk.r2 - 1.0).abs() < 1e-12);
    assert!((ft.slope - 0.6).abs() < 1e-12 && (ft.r2 - 1.0).abs() < 1e-12);
}

#[test]
fn mgf_monte_carlo_is_dominated() {
    for lambda in [0.1, 0.5, 1.0] {
        let mc = mgf_u_monte_carlo(lambda, 0.8, 1, 0.3, 4000, 32, 3, 4).unwrap();
        let bound = mgf_u_bound(lambda, 0.8, 1, 0.3).unwrap();
        assert!(
            mc.log_mean <= bound + 5.0 * mc.stderr,
            "λ = {lambda}: {} > {bound}",
            mc.log_mean
        );
    }
}

#[test]
fn running_max_mgf_grows_superlinearly() {
    let m = 1.0;
    let mut pts = Vec::new();
    for lambda in [0.5, 1.0, 2.0, 4.0] {
        let r = running_max_mgf(lambda, m, 1, 20_000, 9, 512, 4).unwrap();
        assert!(r.estimate.reliable || lambda > 2.0);
        pts.push((r.growth.ln(), r.estimate.log_mean.ln()));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = ols(&x, &y);
    println!(
        "running max: slope of log log-mgf against log λ^(2/(2−M)) = {:.3}",
        fit.slope
    );
    assert!(y.windows(2).all(|w| w[1] > w[0]));
    assert!(fit.slope > 0.5 && fit.slope <= 1.05);
}
