//! Product integration of weakly singular double integrals on `[0,t]²`.

use crate::error::{Error, Result};

/// Cell count and path regularity for the product rule.
///
/// `path_regularity` is the Hölder index `κ` assumed for the paths; the
/// smooth factor is taken to vanish like `|u−v|^{2ακ}` on the diagonal and
/// that power is absorbed into the exactly integrated kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub n_cells: usize,
    pub path_regularity: f64,
}

impl QuadratureSpec {
    pub fn new(n_cells: usize, path_regularity: f64) -> Result<Self> {
        if n_cells < 4 {
            return Err(Error::domain(
                "QuadratureSpec",
                format!("n_cells must be at least 4, got {n_cells}"),
            ));
        }
        if !(path_regularity > 0.0 && path_regularity <= 1.0) {
            return Err(Error::domain(
                "QuadratureSpec",
                format!("path regularity must lie in (0,1], got {path_regularity}"),
            ));
        }
        Ok(QuadratureSpec {
            n_cells,
            path_regularity,
        })
    }

    /// Piecewise-linear or smooth paths, `κ = 1`.
    pub fn smooth(n_cells: usize) -> Result<Self> {
        Self::new(n_cells, 1.0)
    }

    /// Brownian paths, `κ = 1/2`.
    pub fn brownian(n_cells: usize) -> Result<Self> {
        Self::new(n_cells, 0.5)
    }

    /// Exponent of the kernel `|u−v|^{2H−2}`.
    pub fn singular_exponent(h: f64) -> f64 {
        2.0 * h - 2.0
    }
}

/// Cell midpoints of the uniform `n`-cell partition of `[0,t]`.
pub fn midpoints(t: f64, n: usize) -> Vec<f64> {
    let h = t / n as f64;
    (0..n).map(|i| (i as f64 + 0.5) * h).collect()
}

/// `∫_{cell i} θ^e dθ` for each cell of `[0,t]`, `e > −1`.
pub fn power_cell_weights(t: f64, n: usize, e: f64) -> Vec<f64> {
    let h = t / n as f64;
    let q = e + 1.0;
    (0..n)
        .map(|i| ((i as f64 + 1.0) * h).powf(q) / q - (i as f64 * h).powf(q) / q)
        .collect()
}

fn falling(a: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a - i as f64))
}

/// `∫∫` of `|u−v|^p` over two unit cells `m` apart, `p > −1`.
pub fn lag_weight(m: usize, p: f64) -> f64 {
    let c = 1.0 / ((p + 1.0) * (p + 2.0));
    if m == 0 {
        return 2.0 * c;
    }
    if m < 8 {
        let f = |r: f64| c * r.powf(p + 2.0);
        let r = m as f64;
        return f(r + 1.0) - 2.0 * f(r) + f(r - 1.0);
    }
    // central second difference as a series in even derivatives
    let r = m as f64;
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 1..=6 {
        fact *= (2 * k - 1) as f64 * (2 * k) as f64;
        sum += 2.0 * c * falling(p + 2.0, 2 * k) / fact * r.powf(p + 2.0 - 2.0 * k as f64);
    }
    sum
}

/// `∫∫_{[0,t]²} |u−v|^q G(u,v) du dv` for symmetric `G` vanishing like
/// `|u−v|^γ` on the diagonal.
///
/// `g(i, j)` returns `G` at the midpoints of cells `i ≠ j`. The kernel
/// `|u−v|^{q+γ}` is integrated exactly over each cell pair and multiplied by
/// `G/|u−v|^γ` at the midpoints; on diagonal cells that ratio is the mean of
/// its values on the neighbouring cells.
pub fn singular_double<F: Fn(usize, usize) -> f64>(
    t: f64,
    n: usize,
    q: f64,
    gamma: f64,
    g: F,
) -> Result<f64> {
    let p = q + gamma;
    if !(p > -1.0) {
        return Err(Error::domain(
            "singular_double",
            format!("kernel exponent {q} + {gamma} is not integrable"),
        ));
    }
    if n < 2 {
        return Err(Error::domain("singular_double", "need at least two cells"));
    }
    let h = t / n as f64;
    let scale = h.powf(p + 2.0);
    let lag: Vec<f64> = (0..n).map(|m| scale * lag_weight(m, p)).collect();
    let inv_pow: Vec<f64> = (0..n)
        .map(|m| {
            if m == 0 {
                0.0
            } else {
                (m as f64 * h).powf(-gamma)
            }
        })
        .collect();
    let mut off = 0.0;
    // ratio G/|u−v|^γ on the first super-diagonal, reused for the diagonal
    let mut near = vec![0.0; n - 1];
    for i in 0..n {
        let mut row = 0.0;
        for j in i + 1..n {
            let r = g(i, j) * inv_pow[j - i];
            if j == i + 1 {
                near[i] = r;
            }
            row += lag[j - i] * r;
        }
        off += row;
    }
    let mut diag = 0.0;
    for i in 0..n {
        let r = match i {
            0 => near[0],
            _ if i == n - 1 => near[n - 2],
            _ => 0.5 * (near[i - 1] + near[i]),
        };
        diag += r;
    }
    Ok(2.0 * off + lag[0] * diag)
}
