//! Benchmark data generators, selection metrics and replicated studies.
//!
//! Three designs are available: homogeneous Gaussian, heteroscedastic
//! (`y = Xβ* + c⁻¹(Xβ*)²∘ε` with `c = √3‖β*‖₂²`) and Gaussian with a
//! fraction of rows replaced by recentered χ² draws. Errors come from five
//! laws, each centered by its analytic mean.
//!
//! Randomness comes from ChaCha8 (`rand_chacha` 0.9). Replicate `r` of
//! scenario `s` uses the stream `(s << 32) | r` of the master seed, so a
//! replicate's data never depends on how many replicates were requested.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal, StandardNormal, StudentT, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{check_len, invalid, Result};
use crate::estimator::Estimator;
use crate::optimizer::{two_step_fit, SolverConfig, StepOne};
use crate::tuning::{cross_validate_many, default_grid, CvOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimDesign {
    /// Example 1: `x ~ N(0, I)`, additive errors.
    HomogeneousGaussian,
    /// Example 2: `x ~ N(0, I)`, errors scaled by `c⁻¹(xᵀβ*)²`.
    Heteroscedastic,
    /// Example 3: a fraction of rows drawn from `χ²(df) − df`.
    ContaminatedChiSq,
}

impl SimDesign {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "ex1" | "homogeneous" | "homogeneous_gaussian" => Ok(Self::HomogeneousGaussian),
            "2" | "ex2" | "heteroscedastic" => Ok(Self::Heteroscedastic),
            "3" | "ex3" | "contaminated" | "contaminated_chisq" => Ok(Self::ContaminatedChiSq),
            other => invalid(format!("unknown scenario {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    /// `N(0, 4)`.
    Normal04,
    /// `√2·t₃`.
    ScaledT3,
    /// `½N(−1, 4) + ½N(8, 1)`.
    MixN,
    /// `exp(1.3 Z)`.
    LogNormal13,
    /// Weibull with shape 0.3 and scale 0.15.
    Weibull,
}

impl ErrorLaw {
    pub const ALL: [ErrorLaw; 5] = [
        ErrorLaw::Normal04,
        ErrorLaw::ScaledT3,
        ErrorLaw::MixN,
        ErrorLaw::LogNormal13,
        ErrorLaw::Weibull,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "normal04" | "normal" | "n04" => Ok(Self::Normal04),
            "scaledt3" | "t3" => Ok(Self::ScaledT3),
            "mixn" => Ok(Self::MixN),
            "lognormal13" | "lognormal" => Ok(Self::LogNormal13),
            "weibull" => Ok(Self::Weibull),
            other => invalid(format!("unknown error law {other:?}")),
        }
    }

    /// Mean of the uncentered draw.
    pub fn mean(self) -> f64 {
        match self {
            ErrorLaw::Normal04 | ErrorLaw::ScaledT3 => 0.0,
            ErrorLaw::MixN => 0.5 * -1.0 + 0.5 * 8.0,
            ErrorLaw::LogNormal13 => (1.3f64 * 1.3 / 2.0).exp(),
            ErrorLaw::Weibull => WEIBULL_SCALE * gamma(1.0 + 1.0 / WEIBULL_SHAPE),
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::Normal04 => 2.0 * rng.sample::<f64, _>(StandardNormal),
            ErrorLaw::ScaledT3 => {
                std::f64::consts::SQRT_2 * StudentT::new(3.0).expect("valid df").sample(rng)
            }
            ErrorLaw::MixN => {
                if rng.random_bool(0.5) {
                    Normal::new(-1.0, 2.0).expect("valid sd").sample(rng)
                } else {
                    Normal::new(8.0, 1.0).expect("valid sd").sample(rng)
                }
            }
            ErrorLaw::LogNormal13 => (1.3 * rng.sample::<f64, _>(StandardNormal)).exp(),
            ErrorLaw::Weibull => Weibull::new(WEIBULL_SCALE, WEIBULL_SHAPE)
                .expect("valid parameters")
                .sample(rng),
        }
    }
}

const WEIBULL_SHAPE: f64 = 0.3;
const WEIBULL_SCALE: f64 = 0.15;

/// Draws `n` centered errors.
pub fn gen_errors<R: Rng + ?Sized>(law: ErrorLaw, n: usize, rng: &mut R) -> Vec<f64> {
    let m = law.mean();
    (0..n).map(|_| law.draw(rng) - m).collect()
}

/// Whether χ² contamination replaces whole rows or individual entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contamination {
    #[default]
    Rows,
    Entries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub design: SimDesign,
    pub error_law: ErrorLaw,
    pub n: usize,
    pub p: usize,
    pub beta_true: Vec<f64>,
    pub contamination_fraction: f64,
    pub chi_df: u32,
    #[serde(default)]
    pub contamination: Contamination,
}

/// `(3 ×5, 2 ×5, 1.5 ×5, 0 ×(p−15))`.
pub fn default_beta(p: usize) -> Result<Vec<f64>> {
    if p < 15 {
        return invalid(format!("default coefficient vector needs p >= 15, got {p}"));
    }
    let mut b = vec![0.0; p];
    for (j, v) in b.iter_mut().take(15).enumerate() {
        *v = [3.0, 2.0, 1.5][j / 5];
    }
    Ok(b)
}

impl SimScenario {
    /// A scenario with the default coefficient vector, 20% contamination and
    /// 10 degrees of freedom.
    pub fn new(design: SimDesign, error_law: ErrorLaw, n: usize, p: usize) -> Result<Self> {
        let s = Self {
            design,
            error_law,
            n,
            p,
            beta_true: default_beta(p)?,
            contamination_fraction: 0.2,
            chi_df: 10,
            contamination: Contamination::Rows,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return invalid("scenario needs positive n and p");
        }
        check_len(self.p, self.beta_true.len())?;
        if !(0.0..=1.0).contains(&self.contamination_fraction) {
            return invalid("contamination fraction must lie in [0, 1]");
        }
        if self.chi_df == 0 {
            return invalid("chi-square degrees of freedom must be positive");
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let d = match self.design {
            SimDesign::HomogeneousGaussian => "ex1",
            SimDesign::Heteroscedastic => "ex2",
            SimDesign::ContaminatedChiSq => "ex3",
        };
        format!("{d}/{:?}", self.error_law)
    }

    /// `c = √3‖β*‖₂²`.
    pub fn heteroscedastic_constant(&self) -> f64 {
        3f64.sqrt() * self.beta_true.iter().map(|b| b * b).sum::<f64>()
    }
}

/// Draws the design matrix for a scenario.
pub fn gen_design<R: Rng + ?Sized>(scenario: &SimScenario, rng: &mut R) -> DMatrix<f64> {
    let (n, p) = (scenario.n, scenario.p);
    // Fill row by row so the draw order does not depend on storage layout.
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = rng.sample(StandardNormal);
        }
    }
    if scenario.design == SimDesign::ContaminatedChiSq && scenario.contamination_fraction > 0.0 {
        let df = scenario.chi_df as f64;
        let chi = ChiSquared::new(df).expect("positive df");
        match scenario.contamination {
            Contamination::Rows => {
                let k = (scenario.contamination_fraction * n as f64).ceil() as usize;
                let mut rows = sample(rng, n, k.min(n)).into_vec();
                rows.sort_unstable();
                for i in rows {
                    for j in 0..p {
                        x[(i, j)] = chi.sample(rng) - df;
                    }
                }
            }
            Contamination::Entries => {
                for i in 0..n {
                    for j in 0..p {
                        if rng.random_bool(scenario.contamination_fraction) {
                            x[(i, j)] = chi.sample(rng) - df;
                        }
                    }
                }
            }
        }
    }
    x
}

/// Draws `(X, y)` and returns the dataset with the true coefficients.
pub fn gen_dataset<R: Rng + ?Sized>(
    scenario: &SimScenario,
    rng: &mut R,
) -> Result<(Dataset, Vec<f64>)> {
    generate(scenario, rng, false)
}

/// As [`gen_dataset`] but with the heteroscedastic multiplier forced to 1.
#[doc(hidden)]
pub fn gen_dataset_unit_multiplier<R: Rng + ?Sized>(
    scenario: &SimScenario,
    rng: &mut R,
) -> Result<(Dataset, Vec<f64>)> {
    generate(scenario, rng, true)
}

fn generate<R: Rng + ?Sized>(
    scenario: &SimScenario,
    rng: &mut R,
    unit_multiplier: bool,
) -> Result<(Dataset, Vec<f64>)> {
    scenario.validate()?;
    let x = gen_design(scenario, rng);
    let eps = gen_errors(scenario.error_law, scenario.n, rng);
    let y = response(scenario, &x, &eps, unit_multiplier);
    Ok((Dataset::new(x, y)?, scenario.beta_true.clone()))
}

/// `Xβ* + ε`, or `Xβ* + c⁻¹(Xβ*)²∘ε` for the heteroscedastic design.
pub fn response(
    scenario: &SimScenario,
    x: &DMatrix<f64>,
    eps: &[f64],
    unit_multiplier: bool,
) -> DVector<f64> {
    let signal = x * DVector::from_column_slice(&scenario.beta_true);
    let c = scenario.heteroscedastic_constant();
    DVector::from_iterator(
        scenario.n,
        signal.iter().zip(eps).map(|(&m, &e)| {
            let scale = if scenario.design == SimDesign::Heteroscedastic && !unit_multiplier {
                m * m / c
            } else {
                1.0
            };
            m + scale * e
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub l2_error: f64,
    pub l1_error: f64,
    pub model_size: usize,
    pub fpr_percent: f64,
    pub fnr_percent: f64,
}

/// Estimation errors and selection rates; the selected set is the exact
/// nonzero support of `beta_hat`.
pub fn selection_metrics(beta_hat: &[f64], beta_true: &[f64]) -> Result<SelectionMetrics> {
    check_len(beta_true.len(), beta_hat.len())?;
    let mut l2 = 0.0;
    let mut l1 = 0.0;
    let (mut size, mut fp, mut fneg, mut s) = (0usize, 0usize, 0usize, 0usize);
    for (&b, &t) in beta_hat.iter().zip(beta_true) {
        let d = b - t;
        l2 += d * d;
        l1 += d.abs();
        let selected = b != 0.0;
        let important = t != 0.0;
        size += selected as usize;
        s += important as usize;
        fp += (selected && !important) as usize;
        fneg += (!selected && important) as usize;
    }
    let null = beta_true.len() - s;
    let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    Ok(SelectionMetrics {
        l2_error: l2.sqrt(),
        l1_error: l1,
        model_size: size,
        fpr_percent: pct(fp, null),
        fnr_percent: pct(fneg, s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub scenarios: Vec<SimScenario>,
    pub estimators: Vec<Estimator>,
    pub replicates: usize,
    pub n_alpha: usize,
    pub n_lambda: usize,
    pub cv: CvOptions,
    pub solver: SolverConfig,
    pub master_seed: u64,
}

/// Outcome of one (scenario, estimator, replicate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub scenario: usize,
    pub estimator: String,
    pub replicate: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub converged: bool,
    pub metrics: Option<SelectionMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Mean and sample standard deviation (zero for fewer than two values).
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let sd = if k < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64).sqrt()
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub estimator: String,
    pub l2_error: MeanSd,
    pub l1_error: MeanSd,
    pub model_size: MeanSd,
    pub fpr_percent: MeanSd,
    pub fnr_percent: MeanSd,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub rows: Vec<SummaryRow>,
    pub replicates: usize,
    pub master_seed: u64,
    pub records: Vec<ReplicateRecord>,
}

impl StudySummary {
    pub fn row(&self, scenario_label: &str, estimator: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario_label && r.estimator == estimator)
    }
}

/// Independent generator for replicate `replicate` of scenario `scenario`.
pub fn replicate_rng(master_seed: u64, scenario: usize, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((scenario as u64) << 32) | replicate as u64);
    rng
}

/// Runs one replicate of one scenario for every estimator.
pub fn run_replicate(
    plan: &StudyPlan,
    scenario_index: usize,
    replicate: usize,
) -> Result<Vec<ReplicateRecord>> {
    let scenario = &plan.scenarios[scenario_index];
    let mut rng = replicate_rng(plan.master_seed, scenario_index, replicate);
    let (data, beta_true) = gen_dataset(scenario, &mut rng)?;
    let cv_seed = rng.next_u64();
    let grid = default_grid(data.n(), data.p(), plan.n_alpha, plan.n_lambda)?;
    let cvs = cross_validate_many(&data, &grid, &plan.cv, &plan.estimators, &plan.solver, cv_seed)?;

    Ok(plan
        .estimators
        .iter()
        .zip(cvs)
        .map(|(est, cv)| {
            let fit = est.loss_spec(cv.best_alpha).and_then(|loss| {
                let penalty = est.penalty_spec(cv.best_lambda)?;
                let step_one = StepOne::huber(cv.best_alpha, cv.best_lambda)?;
                two_step_fit(&data, &loss, &penalty, &est.weights, &step_one, &plan.solver)
            });
            let mut record = ReplicateRecord {
                scenario: scenario_index,
                estimator: est.to_string(),
                replicate,
                alpha: cv.best_alpha,
                lambda: cv.best_lambda,
                converged: false,
                metrics: None,
                error: None,
            };
            match fit.and_then(|f| Ok((f.converged, selection_metrics(&f.beta_hat, &beta_true)?))) {
                Ok((converged, m)) => {
                    record.converged = converged;
                    record.metrics = Some(m);
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record
        })
        .collect())
}

/// Runs every (scenario, replicate) and aggregates per (scenario, estimator).
pub fn run_study(plan: &StudyPlan) -> Result<StudySummary> {
    if plan.replicates == 0 {
        return invalid("a study needs at least one replicate");
    }
    if plan.estimators.is_empty() || plan.scenarios.is_empty() {
        return invalid("a study needs scenarios and estimators");
    }
    for s in &plan.scenarios {
        s.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..plan.scenarios.len())
        .flat_map(|s| (0..plan.replicates).map(move |r| (s, r)))
        .collect();
    let per_job: Vec<Vec<ReplicateRecord>> = jobs
        .par_iter()
        .map(|&(s, r)| {
            run_replicate(plan, s, r).unwrap_or_else(|e| {
                plan.estimators
                    .iter()
                    .map(|est| ReplicateRecord {
                        scenario: s,
                        estimator: est.to_string(),
                        replicate: r,
                        alpha: f64::NAN,
                        lambda: f64::NAN,
                        converged: false,
                        metrics: None,
                        error: Some(e.to_string()),
                    })
                    .collect()
            })
        })
        .collect();
    let records: Vec<ReplicateRecord> = per_job.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for (si, scenario) in plan.scenarios.iter().enumerate() {
        for est in &plan.estimators {
            let name = est.to_string();
            let mine: Vec<&ReplicateRecord> = records
                .iter()
                .filter(|r| r.scenario == si && r.estimator == name)
                .collect();
            let ok: Vec<SelectionMetrics> = mine.iter().filter_map(|r| r.metrics).collect();
            let col = |f: fn(&SelectionMetrics) -> f64| {
                MeanSd::of(&ok.iter().map(f).collect::<Vec<_>>())
            };
            rows.push(SummaryRow {
                scenario: scenario.label(),
                estimator: name,
                l2_error: col(|m| m.l2_error),
                l1_error: col(|m| m.l1_error),
                model_size: col(|m| m.model_size as f64),
                fpr_percent: col(|m| m.fpr_percent),
                fnr_percent: col(|m| m.fnr_percent),
                completed: ok.len(),
                failed: mine.len() - ok.len(),
            });
        }
    }
    Ok(StudySummary {
        rows,
        replicates: plan.replicates,
        master_seed: plan.master_seed,
        records,
    })
}
