//! Exact samplers for Brownian motion, fractional Brownian motion, the
//! spatial field `Y` and the space-time field `W`.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::kernels::{pow_abs, rh_cov, CovarianceQ, QKind};
use crate::linalg::CholFactor;
use crate::path::{FbmMethod, PathKind, SamplePath, SiteSet, TimeGrid};

/// Default cap on `|grid|·|sites|` for the space-time field and on the
/// dimension of any dense Cholesky factorization.
pub const DEFAULT_CAP: usize = 4096;

/// Brownian motion in `ℝ^d` started from `x` at time zero.
///
/// On a padded grid the points before zero are filled by an independent
/// backward Brownian motion, so the path is two-sided.
pub fn sample_bm<R: Rng + ?Sized>(grid: &TimeGrid, x: &[f64], rng: &mut R) -> Result<SamplePath> {
    let d = x.len();
    if d == 0 {
        return Err(Error::domain("sample_bm", "dimension must be at least 1"));
    }
    let n = grid.len();
    let sd = grid.step().sqrt();
    let z0 = grid.zero_index();
    let mut values = vec![0.0; n * d];
    values[z0 * d..(z0 + 1) * d].copy_from_slice(x);
    for i in z0 + 1..n {
        for k in 0..d {
            let dz: f64 = rng.sample(StandardNormal);
            values[i * d + k] = values[(i - 1) * d + k] + sd * dz;
        }
    }
    for i in (0..z0).rev() {
        for k in 0..d {
            let dz: f64 = rng.sample(StandardNormal);
            values[i * d + k] = values[(i + 1) * d + k] + sd * dz;
        }
    }
    SamplePath::new(grid.clone(), d, values, PathKind::Brownian)
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
fn fgn_autocov(k: usize, h: f64) -> f64 {
    let p = 2.0 * h;
    let k = k as f64;
    0.5 * (pow_abs(k + 1.0, p) - 2.0 * pow_abs(k, p) + pow_abs(k - 1.0, p))
}

enum FbmEngine {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky(CholFactor),
}

/// Exact fBm sampler for a fixed grid and Hurst index `H ∈ (0,1)`.
///
/// Increments are stationary fractional Gaussian noise, generated by
/// circulant embedding when the embedding spectrum is nonnegative and by a
/// dense Cholesky factor of the Toeplitz covariance otherwise. The path is
/// the cumulative sum shifted so that it vanishes at time zero.
pub struct FbmGenerator {
    grid: TimeGrid,
    hurst: f64,
    scale: f64,
    engine: FbmEngine,
}

impl FbmGenerator {
    pub fn new(grid: &TimeGrid, hurst: f64) -> Result<Self> {
        Self::with_method(grid, hurst, FbmMethod::CirculantEmbedding)
    }

    /// Requesting circulant embedding still falls back to Cholesky when the
    /// embedding is not nonnegative.
    pub fn with_method(grid: &TimeGrid, hurst: f64, method: FbmMethod) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::domain(
                "sample_fbm",
                format!("H must lie in (0,1), got {hurst}"),
            ));
        }
        let n = grid.n_steps();
        let scale = grid.step().powf(hurst);
        let engine = match method {
            FbmMethod::CirculantEmbedding => match circulant(n, hurst) {
                Some(e) => e,
                None => cholesky_engine(n, hurst)?,
            },
            FbmMethod::Cholesky => cholesky_engine(n, hurst)?,
        };
        Ok(FbmGenerator {
            grid: grid.clone(),
            hurst,
            scale,
            engine,
        })
    }

    pub fn method(&self) -> FbmMethod {
        match self.engine {
            FbmEngine::Circulant { .. } => FbmMethod::CirculantEmbedding,
            FbmEngine::Cholesky(_) => FbmMethod::Cholesky,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let n = self.grid.n_steps();
        let incr: Vec<f64> = match &self.engine {
            FbmEngine::Circulant { sqrt_eig, fft } => {
                let mut buf: Vec<Complex64> = sqrt_eig
                    .iter()
                    .map(|s| {
                        let (a, b): (f64, f64) =
                            (rng.sample(StandardNormal), rng.sample(StandardNormal));
                        Complex64::new(s * a, s * b)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..n].iter().map(|c| c.re).collect()
            }
            FbmEngine::Cholesky(f) => f.sample(rng),
        };
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for dz in incr {
            acc += self.scale * dz;
            values.push(acc);
        }
        let v0 = values[self.grid.zero_index()];
        if v0 != 0.0 {
            values.iter_mut().for_each(|v| *v -= v0);
        }
        let kind = PathKind::Fractional {
            hurst: self.hurst,
            method: self.method(),
        };
        SamplePath::new(self.grid.clone(), 1, values, kind).expect("shape is consistent")
    }
}

/// Square roots of the scaled circulant spectrum, or `None` if it has a
/// negative eigenvalue beyond round-off.
fn circulant(n: usize, h: f64) -> Option<FbmEngine> {
    let m = n.next_power_of_two();
    let size = 2 * m;
    let mut c: Vec<Complex64> = (0..size)
        .map(|j| Complex64::new(fgn_autocov(if j <= m { j } else { size - j }, h), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut c);
    let max = c.iter().map(|z| z.re).fold(0.0, f64::max);
    if c.iter().any(|z| z.re < -1e-10 * max) {
        return None;
    }
    let sqrt_eig = c
        .iter()
        .map(|z| (z.re.max(0.0) / size as f64).sqrt())
        .collect();
    Some(FbmEngine::Circulant { sqrt_eig, fft })
}

fn cholesky_engine(n: usize, h: f64) -> Result<FbmEngine> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = fgn_autocov(i.abs_diff(j), h);
        }
    }
    match CholFactor::new(&a, n) {
        Ok(f) => Ok(FbmEngine::Cholesky(f)),
        Err(e) => Err(Error::Generation(format!(
            "circulant embedding and Cholesky both failed: {e}"
        ))),
    }
}

/// One fBm path on `grid`; builds a fresh generator per call.
pub fn sample_fbm<R: Rng + ?Sized>(grid: &TimeGrid, hurst: f64, rng: &mut R) -> Result<SamplePath> {
    Ok(FbmGenerator::new(grid, hurst)?.sample(rng))
}

/// Square-root factor of a spatial Gram matrix.
#[derive(Debug)]
enum SpatialFactor {
    /// `Q ≡ c`: every site takes the same `N(0,c)` value.
    Constant(f64),
    /// Cholesky factor over the sites with positive variance; the others are
    /// identically zero.
    Dense {
        active: Vec<usize>,
        chol: CholFactor,
    },
}

impl SpatialFactor {
    fn build(q: &CovarianceQ, sites: &SiteSet, cap: usize) -> Result<Self> {
        if let QKind::Constant(c) = q.kind() {
            return Ok(SpatialFactor::Constant(c.sqrt()));
        }
        let mut active = Vec::new();
        for i in 0..sites.len() {
            let s = sites.site(i);
            if q.eval(s, s)? != 0.0 {
                active.push(i);
            }
        }
        if active.len() > cap {
            return Err(Error::Resource {
                op: "spatial Cholesky",
                needed: active.len(),
                cap,
            });
        }
        let n = active.len();
        let mut a = vec![0.0; n * n];
        for (r, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate().take(r + 1) {
                let v = q.eval(sites.site(i), sites.site(j))?;
                a[r * n + c] = v;
                a[c * n + r] = v;
            }
        }
        let chol = if n == 0 {
            None
        } else {
            Some(CholFactor::new(&a, n)?)
        };
        Ok(match chol {
            Some(chol) => SpatialFactor::Dense { active, chol },
            None => SpatialFactor::Constant(0.0),
        })
    }

    fn n_normals(&self) -> usize {
        match self {
            SpatialFactor::Constant(_) => 1,
            SpatialFactor::Dense { active, .. } => active.len(),
        }
    }

    /// Writes `L z` scattered onto all sites.
    fn apply(&self, z: &[f64], tmp: &mut [f64], out: &mut [f64]) {
        match self {
            SpatialFactor::Constant(s) => out.iter_mut().for_each(|v| *v = s * z[0]),
            SpatialFactor::Dense { active, chol } => {
                chol.mul_into(z, tmp);
                out.iter_mut().for_each(|v| *v = 0.0);
                for (r, &i) in active.iter().enumerate() {
                    out[i] = tmp[r];
                }
            }
        }
    }
}

/// Joint sample of a Gaussian field on a finite site set, optionally
/// indexed by a time grid as well (row-major `[time][site]`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFieldSample {
    sites: Arc<SiteSet>,
    grid: Option<TimeGrid>,
    values: Vec<f64>,
}

impl GaussianFieldSample {
    /// Field with given values; `values.len()` must equal `|grid|·|sites|`.
    pub fn from_values(
        sites: Arc<SiteSet>,
        grid: Option<TimeGrid>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let nt = grid.as_ref().map_or(1, |g| g.len());
        if values.len() != nt * sites.len() {
            return Err(Error::domain(
                "GaussianFieldSample",
                "value count does not match layout",
            ));
        }
        Ok(GaussianFieldSample {
            sites,
            grid,
            values,
        })
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn grid(&self) -> Option<&TimeGrid> {
        self.grid.as_ref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Site index of `x`, or a coverage error naming the operation.
    pub fn site_index(&self, x: &[f64], op: &'static str) -> Result<usize> {
        self.sites.find(x).ok_or_else(|| Error::Coverage {
            op,
            msg: format!("point {x:?} is not a sampled site"),
        })
    }

    /// Value at site `j` of a spatial field.
    pub fn at(&self, j: usize) -> f64 {
        self.values[j]
    }

    /// Value at time index `i`, site `j`.
    pub fn at_time(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.sites.len() + j]
    }

    /// The field `−W`.
    pub fn negated(&self) -> Self {
        GaussianFieldSample {
            sites: self.sites.clone(),
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

/// Sampler for `Y` with `E[Y(x)Y(y)] = Q(x,y)` on a fixed site set.
///
/// The factorization is computed on first use and shared by all samples.
pub struct SpatialFieldSampler {
    q: CovarianceQ,
    sites: Arc<SiteSet>,
    cap: usize,
    factor: OnceLock<Result<SpatialFactor>>,
}

impl SpatialFieldSampler {
    pub fn new(q: &CovarianceQ, sites: SiteSet, cap: usize) -> Self {
        SpatialFieldSampler {
            q: q.clone(),
            sites: Arc::new(sites),
            cap,
            factor: OnceLock::new(),
        }
    }

    fn factor(&self) -> Result<&SpatialFactor> {
        self.factor
            .get_or_init(|| SpatialFactor::build(&self.q, &self.sites, self.cap))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Diagonal jitter used by the factorization (zero when exact).
    pub fn jitter(&self) -> Result<f64> {
        Ok(match self.factor()? {
            SpatialFactor::Constant(_) => 0.0,
            SpatialFactor::Dense { chol, .. } => chol.jitter(),
        })
    }

    pub fn sites(&self) -> &Arc<SiteSet> {
        &self.sites
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GaussianFieldSample> {
        let f = self.factor()?;
        let z: Vec<f64> = (0..f.n_normals())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let mut tmp = vec![0.0; f.n_normals()];
        let mut values = vec![0.0; self.sites.len()];
        f.apply(&z, &mut tmp, &mut values);
        Ok(GaussianFieldSample {
            sites: self.sites.clone(),
            grid: None,
            values,
        })
    }
}

pub fn sample_field_y<R: Rng + ?Sized>(
    q: &CovarianceQ,
    sites: &[Vec<f64>],
    rng: &mut R,
) -> Result<GaussianFieldSample> {
    SpatialFieldSampler::new(q, SiteSet::new(sites)?, DEFAULT_CAP).sample(rng)
}

/// Sampler for `W` with `Cov[W(t,x), W(s,y)] = R_H(t,s) Q(x,y)` on
/// `grid × sites`, realized as `L_T Z L_Xᵀ` with `Z` a standard normal
/// matrix. `W(0,·) = 0` exactly.
pub struct SpaceTimeFieldSampler {
    grid: TimeGrid,
    spatial: SpatialFieldSampler,
    // factor over the nonzero grid times, in grid order
    time: CholFactor,
}

impl SpaceTimeFieldSampler {
    pub fn new(
        grid: &TimeGrid,
        sites: SiteSet,
        hurst: f64,
        q: &CovarianceQ,
        cap: usize,
    ) -> Result<Self> {
        let needed = grid.len() * sites.len();
        if needed > cap {
            return Err(Error::Resource {
                op: "sample_w_on_grid",
                needed,
                cap,
            });
        }
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::domain(
                "sample_w_on_grid",
                format!("H must lie in (0,1), got {hurst}"),
            ));
        }
        let times: Vec<f64> = grid.times().into_iter().filter(|t| *t != 0.0).collect();
        let n = times.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = rh_cov(times[i], times[j], hurst);
            }
        }
        let time = CholFactor::new(&a, n)?;
        let spatial = SpatialFieldSampler::new(q, sites, cap);
        spatial.factor()?;
        Ok(SpaceTimeFieldSampler {
            grid: grid.clone(),
            spatial,
            time,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GaussianFieldSample> {
        let f = self.spatial.factor()?;
        let ns = self.spatial.sites.len();
        let nt = self.time.dim();
        let r = f.n_normals();
        // A = Z L_Xᵀ, one row per nonzero time
        let mut a = vec![0.0; nt * ns];
        let mut z = vec![0.0; r];
        let mut tmp = vec![0.0; r];
        for i in 0..nt {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            f.apply(&z, &mut tmp, &mut a[i * ns..(i + 1) * ns]);
        }
        let z0 = self.grid.zero_index();
        let mut values = vec![0.0; self.grid.len() * ns];
        for i in 0..nt {
            let gi = if i < z0 { i } else { i + 1 };
            let row = &mut values[gi * ns..(gi + 1) * ns];
            for (k, l) in self.time.row(i).iter().enumerate() {
                if *l == 0.0 {
                    continue;
                }
                for (w, x) in row.iter_mut().zip(&a[k * ns..(k + 1) * ns]) {
                    *w += l * x;
                }
            }
        }
        Ok(GaussianFieldSample {
            sites: self.spatial.sites.clone(),
            grid: Some(self.grid.clone()),
            values,
        })
    }
}

pub fn sample_w_on_grid<R: Rng + ?Sized>(
    grid: &TimeGrid,
    sites: &[Vec<f64>],
    hurst: f64,
    q: &CovarianceQ,
    rng: &mut R,
) -> Result<GaussianFieldSample> {
    SpaceTimeFieldSampler::new(grid, SiteSet::new(sites)?, hurst, q, DEFAULT_CAP)?.sample(rng)
}
