//! Named estimator recipes such as `HA-Lasso`, `TA-MCP` or `WCA-MCP`.
//!
//! The prefix picks the loss (`HA` Huber, `TA` Tukey, `CA` Cauchy, `QA`
//! quadratic), an optional leading `W` selects the `min{1, 4/‖x‖∞}` row
//! weight, and the suffix picks the penalty.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::losses::{LossFamily, LossSpec, WeightSpec};
use crate::penalties::{PenaltyFamily, PenaltySpec};

/// Cap used by the `W` prefix.
pub const DEFAULT_WEIGHT_CAP: f64 = 4.0;

/// A loss family, penalty family and row weighting. `α` and `λ` are left open
/// for tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub loss: LossFamily,
    pub penalty: PenaltyFamily,
    pub shape: f64,
    pub weights: WeightSpec,
}

impl Estimator {
    pub fn new(loss: LossFamily, penalty: PenaltyFamily, weights: WeightSpec) -> Self {
        Self {
            loss,
            penalty,
            shape: penalty.default_shape(),
            weights,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let upper = name.trim().to_ascii_uppercase();
        let Some((head, tail)) = upper.split_once('-') else {
            return invalid(format!("estimator name {name:?} must look like HA-MCP"));
        };
        let (weighted, head) = match head.strip_prefix('W') {
            Some(rest) => (true, rest),
            None => (false, head),
        };
        let loss = match head {
            "HA" => LossFamily::Huber,
            "TA" => LossFamily::Tukey,
            "CA" => LossFamily::Cauchy,
            "QA" => LossFamily::Quadratic,
            _ => return invalid(format!("unknown loss prefix in {name:?}")),
        };
        let penalty = PenaltyFamily::parse(tail)?;
        let weights = if weighted {
            WeightSpec::InfinityCap {
                cap: DEFAULT_WEIGHT_CAP,
            }
        } else {
            WeightSpec::Unweighted
        };
        Ok(Self::new(loss, penalty, weights))
    }

    pub fn loss_spec(&self, alpha: f64) -> Result<LossSpec> {
        LossSpec::new(self.loss, alpha)
    }

    pub fn penalty_spec(&self, lambda: f64) -> Result<PenaltySpec> {
        PenaltySpec::new(self.penalty, lambda, self.shape)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = if self.weights.is_weighted() { "W" } else { "" };
        let l = match self.loss {
            LossFamily::Huber => "HA",
            LossFamily::Tukey => "TA",
            LossFamily::Cauchy => "CA",
            LossFamily::Quadratic => "QA",
        };
        let p = match self.penalty {
            PenaltyFamily::Lasso => "Lasso",
            PenaltyFamily::Scad => "SCAD",
            PenaltyFamily::Mcp => "MCP",
        };
        write!(f, "{w}{l}-{p}")
    }
}
