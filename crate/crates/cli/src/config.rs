//! Flat TOML experiment configuration with command-line overrides.

use serde::Deserialize;
use shefk_core::feynman_kac::DEFAULT_WORK_CAP;
use shefk_core::gaussian_paths::DEFAULT_CAP;
use shefk_core::kernels::{CovarianceQ, QConstants};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub hurst: f64,
    /// `constant`, `fbm_spatial` or `tabulated`.
    pub q_kind: String,
    pub q_c: f64,
    pub q_theta: f64,
    /// Scalar sites and row-major matrix for `tabulated`.
    pub q_sites: Vec<f64>,
    pub q_matrix: Vec<f64>,
    pub q_c0: Option<f64>,
    pub q_alpha: Option<f64>,
    pub q_c1: Option<f64>,
    pub q_c2: Option<f64>,
    pub q_beta: Option<f64>,

    pub t: Vec<f64>,
    pub k: Vec<usize>,
    pub n_steps: usize,
    /// Time steps of the factorized `Y·B̂` route in `covariance`.
    pub n_steps_y: usize,
    pub n_rep: usize,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    pub x: Vec<f64>,
    pub u0: f64,

    /// Spatial sites for `field`.
    pub sites: Vec<f64>,
    /// Fixture names for `covariance`.
    pub phi: String,
    pub psi: String,
    pub quad_cells: usize,

    pub alpha: f64,
    pub ml_alpha: f64,
    pub ml_beta: f64,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub run_max_m: f64,
    pub dim: usize,
    /// `a, b, u, v, w` of the Gamma-ratio lemma.
    pub gamma_params: Vec<f64>,
    pub n_max: usize,

    pub beta: f64,
    pub c_h: f64,
    pub y: f64,
    pub c_lambda: f64,
    pub c_lambda_reps: usize,

    pub work_cap: u64,
    pub max_cholesky: usize,
    /// `quick` or `full`, for `selftest`.
    pub scale: String,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            hurst: 0.3,
            q_kind: "fbm_spatial".into(),
            q_c: 1.0,
            q_theta: 0.5,
            q_sites: Vec::new(),
            q_matrix: Vec::new(),
            q_c0: None,
            q_alpha: None,
            q_c1: None,
            q_c2: None,
            q_beta: None,
            t: vec![1.0],
            k: vec![2],
            n_steps: 32,
            n_steps_y: 256,
            n_rep: 1000,
            eps: None,
            delta: None,
            seed: 1,
            workers: 1,
            x: vec![0.0],
            u0: 1.0,
            sites: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            phi: "sin_pi".into(),
            psi: "linear".into(),
            quad_cells: 1024,
            alpha: 0.8,
            ml_alpha: 0.5,
            ml_beta: 1.0,
            z: vec![0.0, 1.0, 10.0],
            lambda: vec![0.1, 0.5, 1.0],
            run_max_m: 1.0,
            dim: 1,
            gamma_params: vec![1.0, 1.0, 1.0, 1.0, 1.5],
            n_max: 200,
            beta: 0.5,
            c_h: 1.0,
            y: 0.0,
            c_lambda: 0.25,
            c_lambda_reps: 20_000,
            work_cap: DEFAULT_WORK_CAP,
            max_cholesky: DEFAULT_CAP,
            scale: "full".into(),
            out: None,
        }
    }
}

/// Replaces or inserts `key = value`; values that are not TOML literals are
/// taken as strings.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::Config(format!("override `{spec}` is not of the form key=value"))
    })?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed table has the key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    table.insert(key.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses `text`, applies `overrides` in order, and checks the
    /// structure.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !["constant", "fbm_spatial", "tabulated"].contains(&self.q_kind.as_str()) {
            return bad("q_kind must be one of constant, fbm_spatial, tabulated");
        }
        if !["quick", "full"].contains(&self.scale.as_str()) {
            return bad("scale must be quick or full");
        }
        if self.t.is_empty() || self.k.is_empty() || self.x.is_empty() {
            return bad("t, k and x must be nonempty");
        }
        if self.workers == 0 || self.n_steps == 0 || self.n_steps_y == 0 {
            return bad("workers, n_steps and n_steps_y must be at least 1");
        }
        if self.gamma_params.len() != 5 {
            return bad("gamma_params must list a, b, u, v, w");
        }
        if self.q_kind == "tabulated"
            && self.q_matrix.len() != self.q_sites.len() * self.q_sites.len()
        {
            return bad("q_matrix must be |q_sites|² entries, row-major");
        }
        Ok(())
    }

    pub fn covariance(&self) -> shefk_core::Result<CovarianceQ> {
        let q = match self.q_kind.as_str() {
            "constant" => CovarianceQ::constant(self.q_c)?,
            "fbm_spatial" => CovarianceQ::fbm_spatial(self.q_theta)?,
            _ => {
                let sites: Vec<Vec<f64>> = self.q_sites.iter().map(|s| vec![*s]).collect();
                let base = QConstants {
                    c0: 1.0,
                    alpha: 1.0,
                    c1: 1.0,
                    c2: 0.0,
                    beta: 0.0,
                };
                CovarianceQ::tabulated(sites, self.q_matrix.clone(), self.declared(base))?
            }
        };
        let declared = self.declared(q.constants());
        if declared != q.constants() {
            return q.with_constants(declared);
        }
        Ok(q)
    }

    fn declared(&self, base: QConstants) -> QConstants {
        QConstants {
            c0: self.q_c0.unwrap_or(base.c0),
            alpha: self.q_alpha.unwrap_or(base.alpha),
            c1: self.q_c1.unwrap_or(base.c1),
            c2: self.q_c2.unwrap_or(base.c2),
            beta: self.q_beta.unwrap_or(base.beta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::load("hurts = 0.3", &[]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::load("hurst = \"x\"", &[]),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn overrides_apply_in_order() {
        let c = ExperimentConfig::load(
            "hurst = 0.2\nt = [1.0]",
            &["t=[0.5, 2.0]".into(), "q_kind=constant".into()],
        )
        .unwrap();
        assert_eq!(c.t, vec![0.5, 2.0]);
        assert_eq!(c.q_kind, "constant");
        assert_eq!(c.hurst, 0.2);
        assert!(ExperimentConfig::load("", &["nokey".into()]).is_err());
    }

    #[test]
    fn declared_constants_override_defaults() {
        let c = ExperimentConfig::load("q_c0 = 2.0", &[]).unwrap();
        assert_eq!(c.covariance().unwrap().constants().c0, 2.0);
    }
}
