use shefk_core::gaussian_paths::{
    sample_bm, FbmGenerator, SpaceTimeFieldSampler, SpatialFieldSampler,
};
use shefk_core::kernels::{rh_cov, CovarianceQ};
use shefk_core::path::{FbmMethod, SiteSet, TimeGrid};
use shefk_core::rng::{par_map, stream};
use shefk_core::stats::{covariance_stderr, ks_normal};

const PROBES: [(f64, f64); 6] = [
    (0.125, 0.125),
    (0.5, 0.5),
    (1.0, 1.0),
    (0.25, 0.75),
    (0.5, 1.0),
    (0.125, 0.875),
];

fn check_fbm_covariance(h: f64, method: FbmMethod, n: usize, seed: u64) {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let gen = FbmGenerator::with_method(&grid, h, method).unwrap();
    let paths = par_map(4, n, |r| gen.sample(&mut stream(seed, r as u64)));
    for (t, s) in PROBES {
        let (i, j) = (grid.index_of(t).unwrap(), grid.index_of(s).unwrap());
        let a: Vec<f64> = paths.iter().map(|p| p.point(i)[0]).collect();
        let b: Vec<f64> = paths.iter().map(|p| p.point(j)[0]).collect();
        // raw second moment: the process is centred
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let (m, se) = shefk_core::stats::mean_stderr(&prod);
        let want = rh_cov(t, s, h);
        assert!(
            (m - want).abs() <= 5.0 * se,
            "H = {h} {method:?} ({t},{s}): {m} vs {want} ± {se}"
        );
    }
}

#[test]
fn fbm_covariance_matches_rh() {
    for (k, h) in [0.1, 0.25, 0.4].into_iter().enumerate() {
        check_fbm_covariance(h, FbmMethod::CirculantEmbedding, 20_000, k as u64);
    }
}

#[test]
fn cholesky_fallback_matches_rh() {
    check_fbm_covariance(0.3, FbmMethod::Cholesky, 20_000, 11);
}

#[test]
fn half_hurst_is_brownian() {
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let gen = FbmGenerator::new(&grid, 0.5).unwrap();
    let ends: Vec<f64> = (0..20_000)
        .map(|r| gen.sample(&mut stream(5, r)).point(32)[0])
        .collect();
    let (_, p) = ks_normal(&ends, 1.0);
    assert!(p > 0.01, "KS p-value {p}");
    let incs: Vec<f64> = (0..20_000)
        .map(|r| {
            let path = gen.sample(&mut stream(8, r));
            (path.point(20)[0] - path.point(12)[0]) / 0.5
        })
        .collect();
    assert!(ks_normal(&incs, 1.0).1 > 0.01);
}

#[test]
fn brownian_increments_are_standard() {
    let grid = TimeGrid::new(2.0, 8).unwrap();
    let ends: Vec<f64> = (0..20_000)
        .map(|r| {
            sample_bm(&grid, &[0.0], &mut stream(9, r))
                .unwrap()
                .point(8)[0]
        })
        .collect();
    assert!(ks_normal(&ends, 2f64.sqrt()).1 > 0.01);
}

#[test]
fn fbm_self_similarity() {
    // B(c·) has the law of c^H B(·): compare endpoint variances on [0,1] and [0,4]
    let h = 0.25;
    let n = 20_000;
    let g1 = FbmGenerator::new(&TimeGrid::new(1.0, 16).unwrap(), h).unwrap();
    let g4 = FbmGenerator::new(&TimeGrid::new(4.0, 16).unwrap(), h).unwrap();
    let e1: Vec<f64> = (0..n)
        .map(|r| g1.sample(&mut stream(1, r)).point(16)[0].powi(2))
        .collect();
    let e4: Vec<f64> = (0..n)
        .map(|r| g4.sample(&mut stream(2, r)).point(16)[0].powi(2))
        .collect();
    let (m1, s1) = shefk_core::stats::mean_stderr(&e1);
    let (m4, s4) = shefk_core::stats::mean_stderr(&e4);
    let scale = 4f64.powf(2.0 * h);
    assert!((m4 - scale * m1).abs() <= 5.0 * (s4 * s4 + scale * scale * s1 * s1).sqrt());
}

#[test]
fn space_time_field_is_kronecker() {
    let q = CovarianceQ::fbm_spatial(0.5).unwrap();
    let grid = TimeGrid::new(1.0, 8).unwrap();
    let sites = SiteSet::from_scalars(&[0.0, 0.5, 1.0, 2.0]).unwrap();
    let h = 0.3;
    let sampler = SpaceTimeFieldSampler::new(&grid, sites, h, &q, 4096).unwrap();
    let fields = par_map(4, 20_000, |r| {
        sampler.sample(&mut stream(3, r as u64)).unwrap()
    });
    for (ti, xi, tj, xj) in [(8, 1, 8, 1), (4, 2, 8, 3), (2, 3, 6, 2), (8, 3, 8, 2)] {
        let a: Vec<f64> = fields.iter().map(|f| f.at_time(ti, xi)).collect();
        let b: Vec<f64> = fields.iter().map(|f| f.at_time(tj, xj)).collect();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let (m, se) = shefk_core::stats::mean_stderr(&prod);
        let (x, y) = (fields[0].sites().site(xi)[0], fields[0].sites().site(xj)[0]);
        let want = rh_cov(ti as f64 / 8.0, tj as f64 / 8.0, h) * q.eval(&[x], &[y]).unwrap();
        assert!(
            (m - want).abs() <= 5.0 * se,
            "({ti},{xi})×({tj},{xj}): {m} vs {want} ± {se}"
        );
    }
    assert!(fields
        .iter()
        .all(|f| (0..4).all(|j| f.at_time(0, j) == 0.0)));
}

#[test]
fn spatial_field_covariance() {
    let q = CovarianceQ::fbm_spatial(0.3).unwrap();
    let xs = [-1.0, -0.2, 0.0, 0.7, 1.5];
    let sampler = SpatialFieldSampler::new(&q, SiteSet::from_scalars(&xs).unwrap(), 4096);
    let ys = par_map(4, 20_000, |r| {
        sampler.sample(&mut stream(4, r as u64)).unwrap()
    });
    for (i, j) in [(0, 0), (0, 4), (1, 3), (3, 4)] {
        let a: Vec<f64> = ys.iter().map(|y| y.at(i)).collect();
        let b: Vec<f64> = ys.iter().map(|y| y.at(j)).collect();
        let (c, se) = covariance_stderr(&a, &b);
        let want = q.eval(&[xs[i]], &[xs[j]]).unwrap();
        assert!(
            (c - want).abs() <= 5.0 * se,
            "({i},{j}): {c} vs {want} ± {se}"
        );
    }
    // Q(0,0) = 0 pins the field at the origin
    assert!(ys.iter().all(|y| y.at(2) == 0.0));
}
