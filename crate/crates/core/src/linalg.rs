//! Jittered Cholesky factorization with packed storage.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Jitter multipliers tried in order; the jitter added is `λ·trace/n·I`.
const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// Lower Cholesky factor `L` with `L Lᵀ = A + jitter·I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholFactor {
    n: usize,
    // row i holds L[i][0..=i] at offset i(i+1)/2
    packed: Vec<f64>,
    jitter: f64,
}

impl CholFactor {
    /// Factors the symmetric row-major `n×n` matrix `a`.
    pub fn new(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        if n == 0 {
            return Err(Error::domain("cholesky", "empty matrix"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("cholesky", "matrix has non-finite entries"));
        }
        if a.iter().all(|v| *v == 0.0) {
            return Ok(CholFactor {
                n,
                packed: vec![0.0; n * (n + 1) / 2],
                jitter: 0.0,
            });
        }
        let scale = (0..n).map(|i| a[i * n + i]).sum::<f64>().abs() / n as f64;
        let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
        let floor = 16.0 * f64::EPSILON * max_diag;
        for lambda in JITTER_LADDER {
            let jitter = lambda * scale;
            if let Some(packed) = factor_packed(a, n, jitter, floor) {
                return Ok(CholFactor { n, packed, jitter });
            }
        }
        let base = DMatrix::from_row_slice(n, n, a);
        let eig = SymmetricEigen::new(base).eigenvalues;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        Err(Error::Covariance {
            eigenvalue: min,
            floor: -JITTER_LADDER[5] * scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Diagonal jitter that was needed for the factorization to succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `L[i][j]` for `j ≤ i`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.packed[i * (i + 1) / 2 + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let o = i * (i + 1) / 2;
        &self.packed[o..o + i + 1]
    }

    /// `out = L z`.
    pub fn mul_into(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.row(i).iter().zip(z).map(|(l, x)| l * x).sum();
        }
    }

    /// One draw from `N(0, L Lᵀ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = vec![0.0; self.n];
        self.mul_into(&z, &mut out);
        out
    }
}

/// Row-oriented Cholesky of `a + jitter·I`; `None` if a pivot falls to `floor` or below.
fn factor_packed(a: &[f64], n: usize, jitter: f64, floor: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        let oi = i * (i + 1) / 2;
        for j in 0..=i {
            let oj = j * (j + 1) / 2;
            let dot: f64 = (0..j).map(|k| l[oi + k] * l[oj + k]).sum();
            let s = a[i * n + j] - dot;
            if i == j {
                let s = s + jitter;
                if !(s > floor) {
                    return None;
                }
                l[oi + i] = s.sqrt();
            } else {
                l[oi + j] = s / l[oj + j];
            }
        }
    }
    Some(l)
}
