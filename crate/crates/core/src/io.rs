//! CSV ingestion, prescreening, prediction and the random-split relative
//! prediction error protocol.
//!
//! CSV dialect: comma separated, UTF-8, one header row, unquoted numeric
//! fields with `.` as decimal separator.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_len, invalid, PramError, Result};
use crate::estimator::Estimator;
use crate::optimizer::{two_step_fit, SolverConfig, StepOne};
use crate::tuning::{cross_validate_many, default_grid, CvOptions};

fn io_err(path: &Path, source: std::io::Error) -> PramError {
    PramError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A numeric table with a header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Reads every cell of a headed numeric CSV.
pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .zip(&headers)
            .map(|(cell, name)| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| PramError::Parse {
                        row: r + 1,
                        column: name.clone(),
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

/// Loads a dataset, taking `response_column` as `y` and every other column,
/// in file order, as the design.
pub fn load_csv(path: &Path, response_column: &str) -> Result<Dataset> {
    let table = read_table(path)?;
    let resp = table
        .headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| PramError::MissingColumn(response_column.to_string()))?;
    if table.rows.len() < 2 {
        return invalid(format!("need at least 2 rows, found {}", table.rows.len()));
    }
    if table.headers.len() < 2 {
        return invalid("need at least one covariate column besides the response");
    }
    let names: Vec<String> = table
        .headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != resp)
        .map(|(_, h)| h.clone())
        .collect();
    let n = table.rows.len();
    let p = names.len();
    let cols: Vec<usize> = (0..table.headers.len()).filter(|&j| j != resp).collect();
    let design = DMatrix::from_fn(n, p, |i, k| table.rows[i][cols[k]]);
    let response = DVector::from_iterator(n, table.rows.iter().map(|r| r[resp]));
    Dataset::new(design, response)?.with_names(names)
}

/// Writes the dataset with the response as the first column. Values are
/// written with shortest round-trip formatting.
pub fn save_csv(data: &Dataset, path: &Path, response_column: &str) -> Result<()> {
    let mut out = String::new();
    out.push_str(response_column);
    for name in data.column_names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    for i in 0..data.n() {
        out.push_str(&format!("{:?}", data.response()[i]));
        for j in 0..data.p() {
            out.push_str(&format!(",{:?}", data.design()[(i, j)]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp_path = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = File::create(&tmp_path)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp_path, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp_path);
    }
    result.map_err(|e| io_err(path, e))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0).max(1.0)
}

fn abs_correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).abs()
    }
}

/// Keeps the `p1` highest-variance columns, then the `p2` of those most
/// correlated (in absolute value) with the response. Survivors keep their
/// original order; ties go to the lower column index.
pub fn prescreen(data: &Dataset, p1: usize, p2: usize) -> Result<Dataset> {
    if !(p2 <= p1 && p1 <= data.p()) {
        return invalid(format!("need p2 <= p1 <= p, got p2={p2}, p1={p1}, p={}", data.p()));
    }
    let y = data.response().as_slice();
    if variance(y) == 0.0 {
        return invalid("response is constant; correlations are undefined");
    }
    let variances: Vec<f64> = (0..data.p()).map(|j| variance(data.column(j))).collect();
    let mut by_var: Vec<usize> = (0..data.p()).collect();
    by_var.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
    by_var.truncate(p1);

    let corr: Vec<(usize, f64)> = by_var
        .iter()
        .map(|&j| (j, abs_correlation(data.column(j), y)))
        .collect();
    let mut by_corr = corr;
    by_corr.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut keep: Vec<usize> = by_corr.into_iter().take(p2).map(|(j, _)| j).collect();
    keep.sort_unstable();
    Ok(data.select_columns(&keep))
}

/// `new_design · β̂`.
pub fn predict(beta_hat: &[f64], new_design: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_len(beta_hat.len(), new_design.ncols())?;
    Ok((new_design * DVector::from_column_slice(beta_hat)).iter().copied().collect())
}

/// Column centering and scaling to unit variance; the response is centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub response_mean: f64,
}

impl Standardization {
    pub fn fit(data: &Dataset) -> Self {
        let (means, scales) = (0..data.p())
            .map(|j| {
                let c = data.column(j);
                let sd = variance(c).sqrt();
                (mean(c), if sd > 0.0 { sd } else { 1.0 })
            })
            .unzip();
        let response_mean = mean(data.response().as_slice());
        Self {
            means,
            scales,
            response_mean,
        }
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        check_len(self.means.len(), data.p())?;
        let design = DMatrix::from_fn(data.n(), data.p(), |i, j| {
            (data.design()[(i, j)] - self.means[j]) / self.scales[j]
        });
        let response = data.response().map(|y| y - self.response_mean);
        let out = Dataset::new(design, response)?;
        match data.names() {
            Some(n) => out.with_names(n.to_vec()),
            None => Ok(out),
        }
    }

    /// Coefficients on the original scale with the intercept the centering
    /// introduces.
    pub fn back_transform(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        let raw: Vec<f64> = beta.iter().zip(&self.scales).map(|(b, s)| b / s).collect();
        let intercept = self.response_mean - raw.iter().zip(&self.means).map(|(b, m)| b * m).sum::<f64>();
        (intercept, raw)
    }
}

/// How each estimator's `(α, λ)` is chosen on a training split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RpeTuning {
    /// Re-run the cross-validated grid search on every split.
    Search {
        n_alpha: usize,
        n_lambda: usize,
        cv: CvOptions,
    },
    /// Use the same `(α, λ)` everywhere.
    Fixed { alpha: f64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeReport {
    pub estimators: Vec<String>,
    pub baseline: String,
    /// `rpe[e][s]`: ratio of estimator `e`'s test MSPE to the baseline's on
    /// split `s`; `None` when either fit failed.
    pub rpe: Vec<Vec<Option<f64>>>,
    pub n_splits: usize,
    pub n_test: usize,
    pub failures: Vec<usize>,
}

/// Repeats random train/test splits and reports each estimator's test MSPE
/// relative to the baseline.
pub fn rpe_eval(
    data: &Dataset,
    estimators: &[Estimator],
    baseline: &Estimator,
    n_test: usize,
    n_splits: usize,
    tuning: &RpeTuning,
    config: &SolverConfig,
    seed: u64,
) -> Result<RpeReport> {
    let n = data.n();
    if n_test == 0 || n_test >= n {
        return invalid(format!("test size must lie in [1, {}), got {n_test}", n));
    }
    if n_splits == 0 {
        return invalid("need at least one split");
    }
    let mut all = vec![*baseline];
    all.extend_from_slice(estimators);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rpe = vec![Vec::with_capacity(n_splits); estimators.len()];
    let mut failures = vec![0; estimators.len()];
    for _ in 0..n_splits {
        let mut test = sample(&mut rng, n, n_test).into_vec();
        test.sort_unstable();
        let train: Vec<usize> = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
        let cv_seed = rng.next_u64();
        let (train, test) = (data.select_rows(&train), data.select_rows(&test));

        let mspe = split_mspe(&train, &test, &all, tuning, config, cv_seed);
        let base = mspe[0];
        for (e, m) in mspe[1..].iter().enumerate() {
            let ratio = match (base, m) {
                (Some(b), Some(m)) if b > 0.0 => Some(m / b),
                _ => None,
            };
            if ratio.is_none() {
                failures[e] += 1;
            }
            rpe[e].push(ratio);
        }
    }
    Ok(RpeReport {
        estimators: estimators.iter().map(ToString::to_string).collect(),
        baseline: baseline.to_string(),
        rpe,
        n_splits,
        n_test,
        failures,
    })
}

fn split_mspe(
    train: &Dataset,
    test: &Dataset,
    estimators: &[Estimator],
    tuning: &RpeTuning,
    config: &SolverConfig,
    cv_seed: u64,
) -> Vec<Option<f64>> {
    let tuned: Vec<Option<(f64, f64)>> = match *tuning {
        RpeTuning::Fixed { alpha, lambda } => vec![Some((alpha, lambda)); estimators.len()],
        RpeTuning::Search {
            n_alpha,
            n_lambda,
            cv,
        } => default_grid(train.n(), train.p(), n_alpha, n_lambda)
            .and_then(|grid| cross_validate_many(train, &grid, &cv, estimators, config, cv_seed))
            .map(|cvs| cvs.iter().map(|c| Some((c.best_alpha, c.best_lambda))).collect())
            .unwrap_or_else(|_| vec![None; estimators.len()]),
    };
    estimators
        .iter()
        .zip(tuned)
        .map(|(est, tuned)| {
            let (alpha, lambda) = tuned?;
            let loss = est.loss_spec(alpha).ok()?;
            let penalty = est.penalty_spec(lambda).ok()?;
            let step_one = StepOne::huber(alpha, lambda).ok()?;
            let fit = two_step_fit(train, &loss, &penalty, &est.weights, &step_one, config).ok()?;
            let pred = predict(&fit.beta_hat, test.design()).ok()?;
            let sq: f64 = pred
                .iter()
                .zip(test.response().iter())
                .map(|(p, y)| (y - p) * (y - p))
                .sum();
            Some(sq / test.n() as f64)
        })
        .collect()
}
