//! Penalized robust approximated quadratic M-estimation for sparse,
//! high-dimensional mean regression.
//!
//! The crate is organized bottom-up:
//!
//! * [`losses`] evaluates the robust loss families `l_α` (Huber, Tukey's
//!   biweight, Cauchy) that converge to `u²/2` as `α → ∞`, together with the
//!   weighted empirical loss and its gradient.
//! * [`penalties`] evaluates the amenable penalties (Lasso, SCAD, MCP) and
//!   their smooth concave part `q_λ = λ‖β‖₁ − ρ_λ`.
//! * [`optimizer`] solves the ℓ1-constrained composite program by proximal
//!   gradient descent with backtracking and provides stationarity, variance
//!   and restricted-curvature diagnostics.
//! * [`tuning`] runs the two-dimensional `(α, log λ)` cross-validation with a
//!   trimmed prediction-error score.
//! * [`simulation`] generates the benchmark designs and error laws and runs
//!   replicated studies.
//! * [`io`] handles CSV ingestion, prescreening, prediction and the
//!   random-split relative prediction error protocol.

pub mod data;
pub mod error;
pub mod estimator;
pub mod io;
pub mod losses;
pub mod optimizer;
pub mod penalties;
pub mod simulation;
pub mod tuning;

pub use data::Dataset;
pub use error::{PramError, Result};
pub use estimator::Estimator;
pub use losses::{LossFamily, LossSpec, WeightSpec};
pub use optimizer::{FitResult, SolverConfig};
pub use penalties::{PenaltyFamily, PenaltySpec};
