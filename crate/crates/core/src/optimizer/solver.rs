use serde::{Deserialize, Serialize};

use super::diagnostics::kkt_from_gradient;
use super::prox::constrained_prox;
use crate::data::Dataset;
use crate::error::{check_len, invalid, PramError, Result};
use crate::losses::{EmpiricalLoss, LossFamily, LossSpec, WeightSpec};
use crate::penalties::PenaltySpec;

/// Stopping rule, step search and ℓ1 side constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Radius `R` of the feasible set `‖β‖₁ ≤ R`.
    pub radius: f64,
    pub max_iter: usize,
    /// Stop once the relative objective change drops below this.
    pub tol: f64,
    /// The relative-change rule only stops the run when the stationarity
    /// residual is also below this.
    #[serde(default = "default_kkt_tol")]
    pub kkt_tol: f64,
    /// Initial and maximal step size.
    pub eta0: f64,
    /// Backtracking factor in `(0, 1)`.
    pub shrink: f64,
}

pub const DEFAULT_KKT_TOL: f64 = 1e-4;

fn default_kkt_tol() -> f64 {
    DEFAULT_KKT_TOL
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            radius: 1e4,
            max_iter: 5000,
            tol: 1e-7,
            kkt_tol: DEFAULT_KKT_TOL,
            eta0: 1.0,
            shrink: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return invalid(format!("radius must be positive, got {}", self.radius));
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.kkt_tol > 0.0) {
            return invalid(format!("kkt_tol must be positive, got {}", self.kkt_tol));
        }
        if !(self.eta0.is_finite() && self.eta0 > 0.0) {
            return invalid(format!("eta0 must be positive, got {}", self.eta0));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return invalid(format!("shrink must lie in (0, 1), got {}", self.shrink));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective `L(β) + ρ_λ(β)` at the initial point and after every
    /// accepted step.
    pub objective_trace: Vec<f64>,
    pub kkt_residual: f64,
    pub alpha_used: f64,
    pub lambda_used: f64,
    /// Step-1 solution when produced by the two-step procedure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_one_beta: Option<Vec<f64>>,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    pub fn support(&self) -> Vec<usize> {
        self.beta_hat
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Composite gradient descent from `init`.
///
/// Each iteration takes `β⁺ = prox(β − η∇L̄(β), ηλ, R)` where the step `η`
/// starts from twice the previous accepted step (capped at `eta0`) and is
/// multiplied by `shrink` until
/// `L̄(β⁺) ≤ L̄(β) + ⟨∇L̄(β), β⁺ − β⟩ + ‖β⁺ − β‖²/(2η)`.
pub fn composite_gd(
    data: &Dataset,
    loss: &LossSpec,
    penalty: &PenaltySpec,
    weights: &WeightSpec,
    config: &SolverConfig,
    init: &[f64],
) -> Result<FitResult> {
    let objective = EmpiricalLoss::new(data, *loss, weights)?;
    run(&objective, penalty, config, init)
}

pub(crate) fn run(
    objective: &EmpiricalLoss<'_>,
    penalty: &PenaltySpec,
    config: &SolverConfig,
    init: &[f64],
) -> Result<FitResult> {
    config.validate()?;
    let data = objective.data();
    let (n, p) = (data.n(), data.p());
    check_len(p, init.len())?;
    if init.iter().any(|b| !b.is_finite()) {
        return invalid("initial point must be finite");
    }
    if l1(init) > config.radius + 1e-8 {
        return invalid(format!(
            "initial point has l1 norm {} above radius {}",
            l1(init),
            config.radius
        ));
    }

    let lambda = penalty.lambda();
    let q = |b: &[f64]| -> f64 { b.iter().map(|&t| penalty.q_value(t)).sum() };

    let mut beta = init.to_vec();
    let mut fitted = vec![0.0; n];
    data.fitted_into(&beta, &mut fitted);
    let mut smooth = objective.value_at_fitted(&fitted) - q(&beta);
    let mut current = smooth + lambda * l1(&beta);
    if !current.is_finite() {
        return Err(PramError::Divergence { iteration: 0 });
    }

    let mut trace = vec![current];
    let mut grad = vec![0.0; p];
    let mut scratch = vec![0.0; n];
    let mut step_point = vec![0.0; p];
    let mut cand_fitted = vec![0.0; n];
    let mut eta = config.eta0;
    let mut converged = false;
    let mut iterations = 0;
    let mut small_change = false;

    'outer: for it in 1..=config.max_iter {
        objective.gradient_at_fitted(&fitted, &mut scratch, &mut grad);
        for (g, &b) in grad.iter_mut().zip(&beta) {
            *g -= penalty.q_deriv(b);
        }
        if small_change && kkt_from_gradient(&beta, &grad, lambda, config.radius) <= config.kkt_tol {
            converged = true;
            break;
        }
        iterations = it;
        eta = (eta / config.shrink).min(config.eta0);

        let slack = 1e-13 * (smooth.abs() + 1.0);
        let (cand, cand_smooth) = loop {
            for ((s, &b), &g) in step_point.iter_mut().zip(&beta).zip(&grad) {
                *s = b - eta * g;
            }
            let cand = constrained_prox(&step_point, eta * lambda, config.radius);
            let diff_sq: f64 = cand.iter().zip(&beta).map(|(c, b)| (c - b) * (c - b)).sum();
            if diff_sq == 0.0 {
                converged = true;
                break 'outer;
            }
            let linear: f64 = cand
                .iter()
                .zip(&beta)
                .zip(&grad)
                .map(|((c, b), g)| (c - b) * g)
                .sum();
            data.fitted_into(&cand, &mut cand_fitted);
            let cand_smooth = objective.value_at_fitted(&cand_fitted) - q(&cand);
            if cand_smooth.is_finite()
                && cand_smooth <= smooth + linear + diff_sq / (2.0 * eta) + slack
            {
                break (cand, cand_smooth);
            }
            eta *= config.shrink;
            if eta < 1e-30 {
                if cand_smooth.is_finite() {
                    // no representable step makes progress
                    break 'outer;
                }
                return Err(PramError::Divergence { iteration: it });
            }
        };

        beta = cand;
        std::mem::swap(&mut fitted, &mut cand_fitted);
        smooth = cand_smooth;
        let next = smooth + lambda * l1(&beta);
        if !next.is_finite() {
            return Err(PramError::Divergence { iteration: it });
        }
        let change = (current - next).abs() / current.abs().max(f64::MIN_POSITIVE);
        current = next;
        trace.push(current);
        small_change = change < config.tol;
    }

    objective.gradient_at_fitted(&fitted, &mut scratch, &mut grad);
    for (g, &b) in grad.iter_mut().zip(&beta) {
        *g -= penalty.q_deriv(b);
    }
    let kkt_residual = kkt_from_gradient(&beta, &grad, lambda, config.radius);
    converged |= small_change && kkt_residual <= config.kkt_tol;

    Ok(FitResult {
        beta_hat: beta,
        iterations,
        converged,
        objective_trace: trace,
        kkt_residual,
        alpha_used: objective.spec().alpha(),
        lambda_used: lambda,
        step_one_beta: None,
    })
}

/// Settings of the convex first stage of [`two_step_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOne {
    pub loss: LossSpec,
    pub lambda: f64,
    /// Reject first-stage losses other than Huber.
    pub require_huber: bool,
}

impl StepOne {
    pub fn huber(alpha: f64, lambda: f64) -> Result<Self> {
        Ok(Self {
            loss: LossSpec::huber(alpha)?,
            lambda,
            require_huber: true,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.require_huber && self.loss.family() != LossFamily::Huber {
            return invalid(format!(
                "step one expects the Huber loss, got {}",
                self.loss.family().as_str()
            ));
        }
        Ok(())
    }

    pub(crate) fn fit(
        &self,
        objective: &EmpiricalLoss<'_>,
        config: &SolverConfig,
        init: &[f64],
    ) -> Result<FitResult> {
        self.validate()?;
        run(objective, &PenaltySpec::lasso(self.lambda)?, config, init)
    }
}

/// Huber + Lasso from zero, then the target loss and penalty warm-started at
/// the first-stage solution.
pub fn two_step_fit(
    data: &Dataset,
    target_loss: &LossSpec,
    target_penalty: &PenaltySpec,
    weights: &WeightSpec,
    step_one: &StepOne,
    config: &SolverConfig,
) -> Result<FitResult> {
    let first = EmpiricalLoss::new(data, step_one.loss, weights)?;
    let initial = step_one.fit(&first, config, &vec![0.0; data.p()])?;
    continue_two_step(data, target_loss, target_penalty, weights, config, initial)
}

/// Second stage of [`two_step_fit`] from an existing first-stage fit.
pub fn continue_two_step(
    data: &Dataset,
    target_loss: &LossSpec,
    target_penalty: &PenaltySpec,
    weights: &WeightSpec,
    config: &SolverConfig,
    step_one: FitResult,
) -> Result<FitResult> {
    let objective = EmpiricalLoss::new(data, *target_loss, weights)?;
    let mut fit = run(&objective, target_penalty, config, &step_one.beta_hat)?;
    fit.step_one_beta = Some(step_one.beta_hat);
    Ok(fit)
}
