use std::f64::consts::PI;

use proptest::prelude::*;
use shefk_core::gaussian_paths::{FbmGenerator, SpatialFieldSampler};
use shefk_core::kernels::{holder_norm, CovarianceQ, HurstParams};
use shefk_core::path::{SamplePath, SiteSet, TimeGrid};
use shefk_core::quadrature::QuadratureSpec;
use shefk_core::rng::{par_map, stream};
use shefk_core::stats::{covariance_stderr, mean_stderr, ols};
use shefk_core::stochastic_integral::{
    cov_closed_form, cov_v_approx, eps_estimator_cov, holder_increment_rhs, moment_bound,
    y_bhat_integral,
};

fn fixture(f: impl Fn(f64) -> f64) -> SamplePath {
    SamplePath::from_fn(TimeGrid::new(1.0, 4096).unwrap(), f)
}

fn setup() -> (CovarianceQ, HurstParams) {
    (
        CovarianceQ::fbm_spatial(0.5).unwrap(),
        HurstParams::new(0.3).unwrap(),
    )
}

#[test]
fn closed_form_matches_v_approx_on_smooth_pair() {
    let (q, hp) = setup();
    let (phi, psi) = (fixture(|s| (PI * s).sin()), fixture(|s| s));
    let c = cov_closed_form(
        &q,
        &phi,
        &psi,
        1.0,
        hp,
        QuadratureSpec::smooth(2048).unwrap(),
    )
    .unwrap();
    let e = 2f64.powi(-10);
    let v = cov_v_approx(&q, &phi, &psi, 1.0, hp, e, e, 8192).unwrap();
    assert!((v / c.value - 1.0).abs() < 1e-4, "{} vs {v}", c.value);
    assert!(c.term_rect < 0.0);
}

#[test]
fn linear_fixture_gap_shrinks_like_eps_to_2h() {
    let (q, hp) = setup();
    let lin = fixture(|s| s);
    let c = cov_closed_form(
        &q,
        &lin,
        &lin,
        1.0,
        hp,
        QuadratureSpec::smooth(2048).unwrap(),
    )
    .unwrap();
    assert!((c.term_diag - 0.5).abs() < 1e-10 && (c.term_rect - 0.125).abs() < 1e-10);
    let gap = |k: i32| {
        let e = 2f64.powi(-k);
        1.0 - cov_v_approx(&q, &lin, &lin, 1.0, hp, e, e, 8192).unwrap() / c.value
    };
    let ratio = gap(8) / gap(10);
    assert!((ratio / 4f64.powf(0.6) - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn grid_estimator_covariance_converges() {
    let (q, hp) = setup();
    let (phi, psi) = (
        fixture(|s| 0.5 + (2.0 * PI * s).sin()),
        fixture(|s| 1.5 * s),
    );
    let c = cov_closed_form(
        &q,
        &phi,
        &psi,
        1.0,
        hp,
        QuadratureSpec::smooth(2048).unwrap(),
    )
    .unwrap()
    .value;
    let errs: Vec<f64> = [64usize, 256]
        .iter()
        .map(|n| {
            let h = 1.0 / *n as f64;
            (eps_estimator_cov(&q, &phi, &psi, 1.0, 0.3, h, h).unwrap() / c - 1.0).abs()
        })
        .collect();
    assert!(errs[1] < 0.5 * errs[0], "{errs:?}");
    assert!(c > 0.0);
}

#[test]
fn constant_q_reduces_to_fbm_variance() {
    let q = CovarianceQ::constant(2.5).unwrap();
    let hp = HurstParams::new(0.3).unwrap();
    let (phi, psi) = (fixture(|s| (3.0 * s).cos()), fixture(|s| s * s));
    let c = cov_closed_form(
        &q,
        &phi,
        &psi,
        1.0,
        hp,
        QuadratureSpec::smooth(256).unwrap(),
    )
    .unwrap();
    assert!((c.value - 2.5).abs() < 1e-9, "{}", c.value);
}

#[test]
fn closed_form_is_symmetric() {
    let (q, hp) = setup();
    let (phi, psi) = (fixture(|s| (PI * s).sin()), fixture(|s| 0.3 - s * s));
    let quad = QuadratureSpec::smooth(512).unwrap();
    let a = cov_closed_form(&q, &phi, &psi, 1.0, hp, quad)
        .unwrap()
        .value;
    let b = cov_closed_form(&q, &psi, &phi, 1.0, hp, quad)
        .unwrap()
        .value;
    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
}

/// Sample covariance of factorized-noise integrals against the exact
/// covariance of the same grid estimator.
#[test]
fn y_bhat_ensemble_matches_estimator_covariance() {
    let (q, _) = setup();
    let n = 64;
    let h = 1.0 / n as f64;
    let (phi, psi) = (fixture(|s| (PI * s).sin()), fixture(|s| s));
    let mut sites: Vec<f64> = (0..=n)
        .flat_map(|i| [phi.at(i as f64 * h)[0], psi.at(i as f64 * h)[0]])
        .collect();
    sites.sort_by(f64::total_cmp);
    sites.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let ys = SpatialFieldSampler::new(&q, SiteSet::from_scalars(&sites).unwrap(), 4096);
    let fbm = FbmGenerator::new(&TimeGrid::padded(1.0, n, 1).unwrap(), 0.3).unwrap();
    let pairs = par_map(4, 20_000, |r| {
        let mut rng = stream(21, r as u64);
        let y = ys.sample(&mut rng).unwrap();
        let b = fbm.sample(&mut rng);
        (
            y_bhat_integral(&y, &b, &phi, 1.0, h).unwrap(),
            y_bhat_integral(&y, &b, &psi, 1.0, h).unwrap(),
        )
    });
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (c, se) = covariance_stderr(&a, &b);
    let want = eps_estimator_cov(&q, &phi, &psi, 1.0, 0.3, h, h).unwrap();
    assert!((c - want).abs() <= 5.0 * se, "{c} vs {want} ± {se}");
}

/// `E[(X_t − X_s)²]` equals the variance of the integral of the shifted path
/// over `[0, t−s]`, by stationarity of the time increments.
fn increment_variance(
    q: &CovarianceQ,
    hp: HurstParams,
    f: &dyn Fn(f64) -> f64,
    s: f64,
    t: f64,
) -> f64 {
    let p = SamplePath::from_fn(TimeGrid::new(t - s, 1024).unwrap(), |r| f(s + r));
    cov_closed_form(q, &p, &p, t - s, hp, QuadratureSpec::smooth(256).unwrap())
        .unwrap()
        .value
}

#[test]
fn holder_sweep() {
    let (q, hp) = setup();
    let alpha = q.constants().alpha;
    let f = |r: f64| (2.0 * PI * r).sin();
    let phi = fixture(f);
    let kappa = 1.0;
    // fit C′ = C″ on one sweep, then freeze and check a disjoint one
    let lags: Vec<f64> = (1..=7).map(|j| 2f64.powi(-j)).collect();
    let basis =
        |s: f64, t: f64| holder_increment_rhs(&phi, s, t, hp, alpha, kappa, 1.0, 1.0).unwrap();
    let mut c: f64 = 0.0;
    for s in [0.0, 0.25, 0.5] {
        for l in &lags {
            c = c.max(increment_variance(&q, hp, &f, s, s + l) / basis(s, s + l));
        }
    }
    for s in [0.1, 0.3, 0.45, 0.7] {
        for l in &lags {
            let lhs = increment_variance(&q, hp, &f, s, s + l);
            let rhs = holder_increment_rhs(&phi, s, s + l, hp, alpha, kappa, c, c).unwrap();
            assert!(lhs <= 1.25 * rhs, "s = {s}, lag {l}: {lhs} > {rhs}");
        }
    }
    let lx: Vec<f64> = lags.iter().map(|l| l.ln()).collect();
    let ly: Vec<f64> = lags
        .iter()
        .map(|l| increment_variance(&q, hp, &f, 0.2, 0.2 + l).ln())
        .collect();
    assert!(ols(&lx, &ly).slope >= 2.0 * hp.h() - 0.1);
    assert_eq!(basis(0.5, 0.5), 0.0);
    assert!(holder_norm(&phi, kappa).unwrap() > 0.0);
}

#[test]
fn increment_variance_matches_ensemble() {
    let (q, hp) = setup();
    let f = |r: f64| (2.0 * PI * r).sin();
    let n = 64;
    let h = 1.0 / n as f64;
    let phi = fixture(f);
    let mut sites: Vec<f64> = (0..=n).map(|i| phi.at(i as f64 * h)[0]).collect();
    sites.sort_by(f64::total_cmp);
    sites.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let ys = SpatialFieldSampler::new(&q, SiteSet::from_scalars(&sites).unwrap(), 4096);
    let fbm = FbmGenerator::new(&TimeGrid::padded(1.0, n, 1).unwrap(), 0.3).unwrap();
    let (s, t) = (0.25, 0.75);
    let sq = par_map(4, 20_000, |r| {
        let mut rng = stream(33, r as u64);
        let y = ys.sample(&mut rng).unwrap();
        let b = fbm.sample(&mut rng);
        (y_bhat_integral(&y, &b, &phi, t, h).unwrap()
            - y_bhat_integral(&y, &b, &phi, s, h).unwrap())
        .powi(2)
    });
    let (m, se) = mean_stderr(&sq);
    // the grid estimator over [s,t] has the law of the one over [0,t−s] for the shifted path
    let shifted = SamplePath::from_fn(TimeGrid::new(t - s, 1024).unwrap(), |r| f(s + r));
    let want = eps_estimator_cov(&q, &shifted, &shifted, t - s, hp.h(), h, h).unwrap();
    assert!((m - want).abs() <= 5.0 * se, "{m} vs {want} ± {se}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn covariance_is_dominated_by_moment_bound(
        a in -2.0f64..2.0, b in -2.0f64..2.0, w1 in 0.5f64..6.0, w2 in 0.5f64..6.0,
        c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, h in 0.26f64..0.49, t in 0.3f64..2.0,
    ) {
        let (q, _) = setup();
        let hp = HurstParams::new(h).unwrap();
        let g = TimeGrid::new(t, 1024).unwrap();
        let phi = SamplePath::from_fn(g.clone(), |s| c0 + a * (w1 * s).sin());
        let psi = SamplePath::from_fn(g, |s| c1 + b * (w2 * s).cos());
        let c = cov_closed_form(&q, &phi, &psi, t, hp, QuadratureSpec::smooth(256).unwrap()).unwrap().value;
        let bound = moment_bound(&q, &phi, &psi, t, hp, 1.0).unwrap();
        prop_assert!(c.abs() <= bound, "|{}| > {}", c, bound);
    }
}
