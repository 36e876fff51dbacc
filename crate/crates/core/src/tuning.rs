//! Cross-validated choice of `(α, λ)` on a rectangle that is uniform in
//! `α` and in `log λ`, scored by a trimmed mean of held-out squared errors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::estimator::Estimator;
use crate::losses::{EmpiricalLoss, LossSpec, WeightSpec};
use crate::optimizer::{solver_run, FitResult, SolverConfig, StepOne};

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_TRIM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    alphas: Vec<f64>,
    lambdas: Vec<f64>,
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return invalid(format!("{name} grid is empty"));
    }
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return invalid(format!("{name} grid must be positive and finite"));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("{name} grid must be strictly increasing"));
    }
    Ok(())
}

impl TuningGrid {
    pub fn new(alphas: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        check_axis("alpha", &alphas)?;
        check_axis("lambda", &lambdas)?;
        Ok(Self { alphas, lambdas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn cells(&self) -> usize {
        self.alphas.len() * self.lambdas.len()
    }
}

/// `α` uniform on `[0.1, 10]·√(n/log p)`, `λ` log-uniform on
/// `[0.01, 2.5]·√(log p/n)`.
pub fn default_grid(n: usize, p: usize, n_alpha: usize, n_lambda: usize) -> Result<TuningGrid> {
    if n < 2 {
        return invalid("default grid needs n >= 2");
    }
    if p < 2 {
        return invalid("default grid needs p >= 2 (log p must be positive)");
    }
    if n_alpha < 2 || n_lambda < 2 {
        return invalid("grid sizes must be at least 2");
    }
    let ratio = (n as f64 / (p as f64).ln()).sqrt();
    let alphas = linspace(0.1 * ratio, 10.0 * ratio, n_alpha);
    let (lo, hi) = ((0.01 / ratio).ln(), (2.5 / ratio).ln());
    let lambdas = linspace(lo, hi, n_lambda).into_iter().map(f64::exp).collect();
    TuningGrid::new(alphas, lambdas)
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| {
            if i + 1 == k {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (k - 1) as f64
            }
        })
        .collect()
}

/// Mean of the squared errors after dropping the largest
/// `⌊trim·m⌋` of them.
pub fn trimmed_mspe(squared_errors: &[f64], trim: f64) -> Result<f64> {
    if squared_errors.is_empty() {
        return invalid("trimmed mean of an empty vector");
    }
    if !(0.0..0.5).contains(&trim) {
        return invalid(format!("trim fraction must lie in [0, 0.5), got {trim}"));
    }
    let mut v = squared_errors.to_vec();
    v.sort_by(f64::total_cmp);
    let keep = v.len() - (trim * v.len() as f64).floor() as usize;
    Ok(v[..keep].iter().sum::<f64>() / keep as f64)
}

/// Row-to-fold assignment: a seeded shuffle dealt round-robin, so fold sizes
/// differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        fold[i] = k % folds;
    }
    fold
}

/// How the first (Huber + Lasso) stage is parameterized inside a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepOneMode {
    /// Use the cell's own `(α, λ)`.
    SameCell,
    /// Use a fixed `(α, λ)` for every cell.
    Fixed { alpha: f64, lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub trim: f64,
    pub step_one: StepOneMode,
    /// Warm-start the first stage along decreasing `λ` within each `α`.
    pub warm_start: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            trim: DEFAULT_TRIM,
            step_one: StepOneMode::SameCell,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// `score_matrix[a][l]`: mean over folds of the trimmed held-out error;
    /// `+∞` when a fit diverged in that cell.
    pub score_matrix: Vec<Vec<f64>>,
    pub best_alpha: f64,
    pub best_lambda: f64,
    pub best_index: (usize, usize),
    pub fold_assignment: Vec<usize>,
    /// Number of (cell, fold) fits that failed.
    pub failed_fits: usize,
}

impl CvResult {
    /// Whether the selected `λ` is strictly inside the grid.
    pub fn lambda_is_interior(&self) -> bool {
        let (_, l) = self.best_index;
        l > 0 && l + 1 < self.score_matrix[0].len()
    }
}

/// Cross-validates one estimator.
pub fn cross_validate(
    data: &Dataset,
    grid: &TuningGrid,
    options: &CvOptions,
    estimator: &Estimator,
    config: &SolverConfig,
    seed: u64,
) -> Result<CvResult> {
    Ok(cross_validate_many(data, grid, options, std::slice::from_ref(estimator), config, seed)?
        .pop()
        .expect("one estimator in, one result out"))
}

/// Cross-validates several estimators on the same folds.
///
/// Estimators with the same row weights share their first-stage fits, which
/// depend only on the cell, the fold and the weights.
pub fn cross_validate_many(
    data: &Dataset,
    grid: &TuningGrid,
    options: &CvOptions,
    estimators: &[Estimator],
    config: &SolverConfig,
    seed: u64,
) -> Result<Vec<CvResult>> {
    let n = data.n();
    if options.folds < 2 {
        return invalid("cross-validation needs at least 2 folds");
    }
    if n < options.folds {
        return invalid(format!("{} folds exceed {} observations", options.folds, n));
    }
    if !(0.0..0.5).contains(&options.trim) {
        return invalid(format!("trim fraction must lie in [0, 0.5), got {}", options.trim));
    }
    config.validate()?;
    if let StepOneMode::Fixed { alpha, lambda } = options.step_one {
        StepOne::huber(alpha, lambda)?;
    }
    for e in estimators {
        e.weights.validate()?;
        for &a in grid.alphas() {
            e.loss_spec(a)?;
        }
    }

    let fold = fold_assignment(n, options.folds, seed);
    let splits: Vec<(Dataset, Dataset)> = (0..options.folds)
        .map(|k| {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != k).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold[i] == k).collect();
            (data.select_rows(&train), data.select_rows(&test))
        })
        .collect();

    let n_a = grid.alphas().len();
    let n_l = grid.lambdas().len();
    let tasks: Vec<(usize, usize)> = (0..options.folds)
        .flat_map(|k| (0..n_a).map(move |a| (k, a)))
        .collect();

    // scores[task][estimator][lambda]
    let scores: Vec<Vec<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(k, a)| {
            let (train, test) = &splits[k];
            score_alpha_path(train, test, grid, a, options, estimators, config)
        })
        .collect();

    let mut results = Vec::with_capacity(estimators.len());
    for e in 0..estimators.len() {
        let mut matrix = vec![vec![0.0; n_l]; n_a];
        let mut failed = 0;
        for (t, &(_, a)) in tasks.iter().enumerate() {
            for l in 0..n_l {
                let s = scores[t][e][l];
                if !s.is_finite() {
                    failed += 1;
                }
                matrix[a][l] += s / options.folds as f64;
            }
        }
        let (ba, bl) = select_best(&matrix);
        results.push(CvResult {
            best_alpha: grid.alphas()[ba],
            best_lambda: grid.lambdas()[bl],
            best_index: (ba, bl),
            score_matrix: matrix,
            fold_assignment: fold.clone(),
            failed_fits: failed,
        });
    }
    Ok(results)
}

/// Minimum of the score matrix; ties go to the larger `λ`, then the larger `α`.
fn select_best(matrix: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_score = f64::INFINITY;
    let mut found = false;
    for l in (0..matrix[0].len()).rev() {
        for a in (0..matrix.len()).rev() {
            let s = matrix[a][l];
            if !found || s < best_score {
                best = (a, l);
                best_score = s;
                found = true;
            }
        }
    }
    best
}

fn held_out_score(test: &Dataset, beta: &[f64], trim: f64) -> f64 {
    let fitted = test.fitted(beta).expect("same column count");
    let sq: Vec<f64> = test
        .response()
        .iter()
        .zip(&fitted)
        .map(|(y, f)| (y - f) * (y - f))
        .collect();
    trimmed_mspe(&sq, trim).unwrap_or(f64::INFINITY)
}

/// Scores every estimator along the `λ` path of one `α` on one fold.
fn score_alpha_path(
    train: &Dataset,
    test: &Dataset,
    grid: &TuningGrid,
    a: usize,
    options: &CvOptions,
    estimators: &[Estimator],
    config: &SolverConfig,
) -> Vec<Vec<f64>> {
    let alpha = grid.alphas()[a];
    let n_l = grid.lambdas().len();
    let mut out = vec![vec![f64::INFINITY; n_l]; estimators.len()];

    // Group estimators by row weights; each group shares its first stage.
    let mut groups: Vec<(WeightSpec, Vec<usize>)> = Vec::new();
    for (i, e) in estimators.iter().enumerate() {
        match groups.iter_mut().find(|(w, _)| *w == e.weights) {
            Some((_, members)) => members.push(i),
            None => groups.push((e.weights, vec![i])),
        }
    }

    for (weights, members) in groups {
        let Ok(stage) = first_stage(train, alpha, options, &weights) else {
            continue;
        };
        let targets: Vec<Option<EmpiricalLoss<'_>>> = members
            .iter()
            .map(|&i| {
                let spec = estimators[i].loss_spec(alpha).ok()?;
                EmpiricalLoss::new(train, spec, &weights).ok()
            })
            .collect();

        let mut warm = vec![0.0; train.p()];
        let mut fixed_cache: Option<FitResult> = None;
        for l in (0..n_l).rev() {
            let lambda = grid.lambdas()[l];
            let step_one = match options.step_one {
                StepOneMode::SameCell => {
                    let s1 = match StepOne::huber(alpha, lambda) {
                        Ok(s) => s,
                        Err(_) => continue,
                    };
                    let init = if options.warm_start {
                        warm.clone()
                    } else {
                        vec![0.0; train.p()]
                    };
                    match s1.fit(&stage.0, config, &init) {
                        Ok(fit) => {
                            warm.clone_from(&fit.beta_hat);
                            fit
                        }
                        Err(_) => continue,
                    }
                }
                StepOneMode::Fixed { .. } => {
                    if fixed_cache.is_none() {
                        let s1 = stage.1.expect("fixed mode carries its settings");
                        match s1.fit(&stage.0, config, &vec![0.0; train.p()]) {
                            Ok(fit) => fixed_cache = Some(fit),
                            Err(_) => break,
                        }
                    }
                    fixed_cache.clone().expect("just filled")
                }
            };

            for (slot, &i) in members.iter().enumerate() {
                let Some(target) = &targets[slot] else { continue };
                let Ok(penalty) = estimators[i].penalty_spec(lambda) else {
                    continue;
                };
                if let Ok(fit) = solver_run(target, &penalty, config, &step_one.beta_hat) {
                    out[i][l] = held_out_score(test, &fit.beta_hat, options.trim);
                }
            }
        }
    }
    out
}

/// The first-stage objective for one `α` (and its fixed settings, if any).
fn first_stage<'a>(
    train: &'a Dataset,
    alpha: f64,
    options: &CvOptions,
    weights: &WeightSpec,
) -> Result<(EmpiricalLoss<'a>, Option<StepOne>)> {
    match options.step_one {
        StepOneMode::SameCell => Ok((
            EmpiricalLoss::new(train, LossSpec::huber(alpha)?, weights)?,
            None,
        )),
        StepOneMode::Fixed { alpha, lambda } => {
            let s1 = StepOne::huber(alpha, lambda)?;
            Ok((EmpiricalLoss::new(train, s1.loss, weights)?, Some(s1)))
        }
    }
}
