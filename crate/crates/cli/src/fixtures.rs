//! Named deterministic paths for the covariance experiments.

use std::f64::consts::PI;

use shefk_core::path::{SamplePath, TimeGrid};

pub const NAMES: [&str; 5] = ["linear", "sin_pi", "mix_a", "mix_b", "zero"];

/// Samples fixture `name` on 4096 steps of `[0,t]`.
pub fn fixture(name: &str, t: f64) -> Option<SamplePath> {
    let f: fn(f64) -> f64 = match name {
        "linear" => |s| s,
        "sin_pi" => |s| (PI * s).sin(),
        "mix_a" => |s| 0.5 + (2.0 * PI * s).sin(),
        "mix_b" => |s| 1.5 * s,
        "zero" => |_| 0.0,
        _ => return None,
    };
    Some(SamplePath::from_fn(TimeGrid::new(t, 4096).ok()?, f))
}

/// Sorted distinct values of `paths` at the trapezoid nodes `i·t/n`.
pub fn node_sites(paths: &[&SamplePath], t: f64, n: usize) -> Vec<f64> {
    let h = t / n as f64;
    let mut v: Vec<f64> = (0..=n)
        .flat_map(|i| paths.iter().map(move |p| p.at(i as f64 * h)[0]))
        .collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
    v
}
