use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pram", version, about = "Robust penalized high-dimensional regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-step fit at a fixed (alpha, lambda).
    Fit(FitArgs),
    /// Cross-validate (alpha, lambda) on a grid, then refit at the best cell.
    Cv(CvArgs),
    /// Replicated Monte-Carlo study on a synthetic design.
    Simulate(SimulateArgs),
    /// Apply fitted coefficients to a new design.
    Predict(PredictArgs),
    /// Random-split relative prediction error against a baseline estimator.
    Rpe(RpeArgs),
    /// Variance then correlation screening of covariate columns.
    Prescreen(PrescreenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Huber,
    Tukey,
    Cauchy,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Lasso,
    Scad,
    Mcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    None,
    Infcap,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Standardize columns before fitting and report coefficients on the
    /// original scale.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "huber")]
    pub loss: LossArg,
    #[arg(long, value_enum, default_value = "lasso")]
    pub penalty: PenaltyArg,
    /// SCAD `a` or MCP `b`; defaults to 3.7 and 3.
    #[arg(long)]
    pub shape: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    pub weight: WeightArg,
    /// Cap for `--weight infcap`.
    #[arg(long, default_value_t = 4.0)]
    pub cap: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e4)]
    pub radius: f64,
    #[arg(long = "max-iter", default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Stationarity residual required before stopping.
    #[arg(long = "kkt-tol", default_value_t = 1e-4)]
    pub kkt_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Number of alpha grid points.
    #[arg(long = "grid-alpha", default_value_t = 10)]
    pub grid_alpha: usize,
    /// Number of lambda grid points.
    #[arg(long = "grid-lambda", default_value_t = 10)]
    pub grid_lambda: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Fraction of largest held-out squared errors dropped from the score.
    #[arg(long, default_value_t = 0.1)]
    pub trim: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// ex1 (homogeneous), ex2 (heteroscedastic) or ex3 (chi-square rows).
    #[arg(long, default_value = "ex1")]
    pub scenario: String,
    /// normal04, scaled-t3, mixn, lognormal or weibull; comma-separated.
    #[arg(long = "error-law", default_value = "normal04", value_delimiter = ',')]
    pub error_law: Vec<String>,
    /// Estimator names such as HA-Lasso or WTA-MCP; comma-separated.
    #[arg(
        long,
        default_value = "HA-Lasso,TA-Lasso,CA-Lasso,HA-MCP,TA-MCP,CA-MCP",
        value_delimiter = ','
    )]
    pub estimators: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub p: usize,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// JSON report written by `fit` or `cv`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV holding the covariate columns named in the model.
    #[arg(long)]
    pub input: PathBuf,
    /// Optional response column; when present the test MSPE is reported.
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RpeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "CA-Lasso,HA-MCP,CA-MCP", value_delimiter = ',')]
    pub estimators: Vec<String>,
    #[arg(long, default_value = "HA-Lasso")]
    pub baseline: String,
    #[arg(long = "n-test", default_value_t = 6)]
    pub n_test: usize,
    #[arg(long, default_value_t = 100)]
    pub splits: usize,
    /// Skip the per-split grid search and use `--alpha`/`--lambda`.
    #[arg(long = "fixed-tuning", requires_all = ["alpha", "lambda"])]
    pub fixed_tuning: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PrescreenArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Columns kept by variance.
    #[arg(long)]
    pub p1: usize,
    /// Columns kept by correlation among those.
    #[arg(long)]
    pub p2: usize,
    /// Output CSV path; a JSON summary goes to stdout.
    #[arg(long)]
    pub out: PathBuf,
}
