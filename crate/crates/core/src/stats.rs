//! Small statistical helpers shared by the Monte Carlo routines.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    crate::rng::tree_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    crate::rng::tree_sum(&dev) / (xs.len() as f64 - 1.0)
}

/// Sample mean with its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    (mean(xs), (variance(xs) / xs.len() as f64).sqrt())
}

/// Sample covariance of paired draws, with the standard error of the
/// estimate (delta method on the centred products).
pub fn covariance_stderr(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let cov = crate::rng::tree_sum(&prods) / (n - 1.0);
    let se = (variance(&prods) / n).sqrt();
    (cov, se)
}

/// `log(Σ exp(x_i))`, stable for large magnitudes.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let w: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    max + crate::rng::tree_sum(&w).ln()
}

/// Log-domain mean of `exp(S_n)` with a jackknife standard error on the log
/// scale and the effective sample size of the weights `exp(S_n - max S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMean {
    pub log_mean: f64,
    pub stderr: f64,
    pub max_exponent: f64,
    pub ess: f64,
}

pub fn log_mean_exp(xs: &[f64]) -> LogMean {
    let n = xs.len();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let total = crate::rng::tree_sum(&w);
    let sq: Vec<f64> = w.iter().map(|v| v * v).collect();
    let ess = total * total / crate::rng::tree_sum(&sq);
    let log_mean = max + (total / n as f64).ln();
    if n < 2 {
        return LogMean {
            log_mean,
            stderr: 0.0,
            max_exponent: max,
            ess,
        };
    }

    // Leave-one-out sums. The largest weight is removed exactly rather than
    // by subtraction, which would cancel when it dominates the total.
    let argmax = w
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > w[best] { i } else { best });
    let without_max = {
        let mut rest = w.clone();
        rest.swap_remove(argmax);
        crate::rng::tree_sum(&rest)
    };
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i == argmax {
                without_max
            } else {
                total - w[i]
            };
            max + (s / (n - 1) as f64).ln()
        })
        .collect();
    let loo_mean = mean(&loo);
    let dev: Vec<f64> = loo
        .iter()
        .map(|l| (l - loo_mean) * (l - loo_mean))
        .collect();
    let var = (n - 1) as f64 / n as f64 * crate::rng::tree_sum(&dev);
    LogMean {
        log_mean,
        stderr: var.max(0.0).sqrt(),
        max_exponent: max,
        ess,
    }
}

/// Two-sided one-sample Kolmogorov–Smirnov test against `N(0, sd²)`.
/// Returns the statistic `D` and its asymptotic p-value.
pub fn ks_normal(xs: &[f64], sd: f64) -> (f64, f64) {
    let normal = Normal::new(0.0, sd).expect("positive sd");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let d = v.iter().enumerate().fold(0.0f64, |d, (i, x)| {
        let f = normal.cdf(*x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    (d, kolmogorov_pvalue(d * n.sqrt()))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_pvalue(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Ordinary least squares fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_mean_exp_of_constant_is_exact() {
        let lm = log_mean_exp(&[2.5; 50]);
        assert_eq!(lm.log_mean, 2.5);
        assert_eq!(lm.stderr, 0.0);
        assert_relative_eq!(lm.ess, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn log_mean_exp_survives_huge_exponents() {
        let lm = log_mean_exp(&[1000.0, 1000.0 + 2f64.ln()]);
        assert_relative_eq!(lm.log_mean, 1000.0 + 1.5f64.ln(), epsilon = 1e-12);
        assert!(lm.log_mean.is_finite());
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 + 2.0 * v).collect();
        let fit = ols(&x, &y);
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.r2, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn kolmogorov_pvalue_reference_points() {
        // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.0098
        assert!((kolmogorov_pvalue(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_pvalue(1.63) - 0.0098).abs() < 1e-3);
    }
}
