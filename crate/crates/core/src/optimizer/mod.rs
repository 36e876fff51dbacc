//! Composite gradient descent for the ℓ1-constrained penalized program
//!
//! ```text
//! minimize  L(β) + ρ_λ(β)   subject to ‖β‖₁ ≤ R
//! ```
//!
//! rewritten as `L̄(β) + λ‖β‖₁` with `L̄ = L − q_λ` smooth, so each step is a
//! gradient step on `L̄` followed by an exact soft-threshold prox over the ℓ1
//! ball.

mod diagnostics;
mod prox;
mod solver;

pub use diagnostics::{kkt_residual, plugin_variance, rsc_probe, RscProbe};
pub use prox::{constrained_prox, soft_threshold};
pub(crate) use solver::run as solver_run;
pub use solver::{composite_gd, continue_two_step, two_step_fit, FitResult, SolverConfig, StepOne};
