use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use pram_core::io::write_atomic;
use pram_core::FitResult;

use crate::config::RunConfig;
use crate::error::CliResult;

/// Top-level JSON document written by every command.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub version: &'static str,
    pub config: RunConfig,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(config: RunConfig, result: T) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            config,
            result,
        }
    }

    /// Writes the report atomically to `out`, or to stdout when absent.
    pub fn emit(&self, out: Option<&Path>) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        match out {
            Some(path) => write_atomic(path, text.as_bytes())?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub final_objective: f64,
    pub step_one_support: Option<usize>,
}

impl From<&FitResult> for Diagnostics {
    fn from(fit: &FitResult) -> Self {
        Self {
            iterations: fit.iterations,
            converged: fit.converged,
            kkt_residual: fit.kkt_residual,
            final_objective: fit.final_objective(),
            step_one_support: fit
                .step_one_beta
                .as_ref()
                .map(|b| b.iter().filter(|v| **v != 0.0).count()),
        }
    }
}

/// Fitted model as consumed by `predict`.
#[derive(Debug, Serialize)]
pub struct ModelSummary {
    pub alpha: f64,
    pub lambda: f64,
    /// Present when the fit used standardized columns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    /// Nonzero coefficients by column name.
    pub coefficients: BTreeMap<String, f64>,
    pub support_size: usize,
    pub diagnostics: Diagnostics,
}

impl ModelSummary {
    pub fn new(fit: &FitResult, names: &[String], intercept: Option<f64>, beta: &[f64]) -> Self {
        let coefficients: BTreeMap<String, f64> = names
            .iter()
            .zip(beta)
            .filter(|(_, b)| **b != 0.0)
            .map(|(n, b)| (n.clone(), *b))
            .collect();
        Self {
            alpha: fit.alpha_used,
            lambda: fit.lambda_used,
            intercept,
            support_size: coefficients.len(),
            coefficients,
            diagnostics: Diagnostics::from(fit),
        }
    }
}
