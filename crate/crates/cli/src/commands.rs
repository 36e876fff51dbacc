use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use pram_core::io::{self, RpeReport, RpeTuning, Standardization};
use pram_core::optimizer::{two_step_fit, StepOne};
use pram_core::simulation::{run_study, ErrorLaw, SimDesign, SimScenario, StudyPlan, StudySummary};
use pram_core::tuning::{cross_validate, default_grid, CvOptions};
use pram_core::{Dataset, Estimator, FitResult, LossFamily, PenaltyFamily, PramError, SolverConfig, WeightSpec};

use crate::args::{
    CvArgs, DataArgs, FitArgs, GridArgs, LossArg, ModelArgs, PenaltyArg, PredictArgs, PrescreenArgs, RpeArgs,
    SimulateArgs, SolverArgs, WeightArg,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{ModelSummary, Report};

fn loss_family(arg: LossArg) -> LossFamily {
    match arg {
        LossArg::Huber => LossFamily::Huber,
        LossArg::Tukey => LossFamily::Tukey,
        LossArg::Cauchy => LossFamily::Cauchy,
        LossArg::Quadratic => LossFamily::Quadratic,
    }
}

fn penalty_family(arg: PenaltyArg) -> PenaltyFamily {
    match arg {
        PenaltyArg::Lasso => PenaltyFamily::Lasso,
        PenaltyArg::Scad => PenaltyFamily::Scad,
        PenaltyArg::Mcp => PenaltyFamily::Mcp,
    }
}

fn estimator(model: &ModelArgs) -> Estimator {
    let weights = match model.weight {
        WeightArg::None => WeightSpec::Unweighted,
        WeightArg::Infcap => WeightSpec::InfinityCap { cap: model.cap },
    };
    let mut est = Estimator::new(loss_family(model.loss), penalty_family(model.penalty), weights);
    if let Some(shape) = model.shape {
        est.shape = shape;
    }
    est
}

fn solver(args: &SolverArgs) -> CliResult<SolverConfig> {
    let cfg = SolverConfig {
        radius: args.radius,
        max_iter: args.max_iter,
        tol: args.tol,
        kkt_tol: args.kkt_tol,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cv_options(grid: &GridArgs) -> CvOptions {
    CvOptions {
        folds: grid.folds,
        trim: grid.trim,
        ..CvOptions::default()
    }
}

fn parse_estimators(names: &[String]) -> CliResult<Vec<Estimator>> {
    Ok(names
        .iter()
        .map(|n| Estimator::parse(n.trim()))
        .collect::<Result<Vec<_>, _>>()?)
}

fn with_data(cfg: RunConfig, data: &DataArgs) -> RunConfig {
    RunConfig {
        input: Some(data.input.clone()),
        response: Some(data.response.clone()),
        standardize: Some(data.standardize),
        ..cfg
    }
}

fn with_model(cfg: RunConfig, est: &Estimator, model: &ModelArgs) -> RunConfig {
    RunConfig {
        loss: Some(est.loss.as_str().to_string()),
        penalty: Some(est.penalty.as_str().to_string()),
        shape: (est.penalty != PenaltyFamily::Lasso).then_some(est.shape),
        weight: Some(match model.weight {
            WeightArg::None => "none".into(),
            WeightArg::Infcap => "infcap".into(),
        }),
        cap: matches!(model.weight, WeightArg::Infcap).then_some(model.cap),
        ..cfg
    }
}

fn with_grid(cfg: RunConfig, grid: &GridArgs) -> RunConfig {
    RunConfig {
        grid_alpha: Some(grid.grid_alpha),
        grid_lambda: Some(grid.grid_lambda),
        folds: Some(grid.folds),
        trim: Some(grid.trim),
        ..cfg
    }
}

/// Loaded data, standardized on request.
struct Prepared {
    data: Dataset,
    names: Vec<String>,
    scaling: Option<Standardization>,
}

impl Prepared {
    fn load(args: &DataArgs) -> CliResult<Self> {
        let raw = io::load_csv(&args.input, &args.response)?;
        let names = raw.column_names();
        if !args.standardize {
            return Ok(Self {
                data: raw,
                names,
                scaling: None,
            });
        }
        let st = Standardization::fit(&raw);
        Ok(Self {
            data: st.apply(&raw)?,
            names,
            scaling: Some(st),
        })
    }

    fn summarize(&self, fit: &FitResult) -> ModelSummary {
        match &self.scaling {
            Some(st) => {
                let (intercept, raw) = st.back_transform(&fit.beta_hat);
                ModelSummary::new(fit, &self.names, Some(intercept), &raw)
            }
            None => ModelSummary::new(fit, &self.names, None, &fit.beta_hat),
        }
    }
}

fn fit_cell(data: &Dataset, est: &Estimator, alpha: f64, lambda: f64, cfg: &SolverConfig) -> CliResult<FitResult> {
    let loss = est.loss_spec(alpha)?;
    let penalty = est.penalty_spec(lambda)?;
    let step_one = StepOne::huber(alpha, lambda)?;
    Ok(two_step_fit(data, &loss, &penalty, &est.weights, &step_one, cfg)?)
}

#[derive(Debug, Serialize)]
struct FitOutput {
    model: ModelSummary,
}

pub fn fit(args: &FitArgs, threads: usize) -> CliResult<()> {
    let est = estimator(&args.model);
    let solver = solver(&args.solver)?;
    let cfg = RunConfig {
        command: "fit".into(),
        alpha: Some(args.alpha),
        lambda: Some(args.lambda),
        solver: Some(solver),
        out: args.out.clone(),
        threads,
        ..RunConfig::default()
    };
    let cfg = with_model(with_data(cfg, &args.data), &est, &args.model);

    let prepared = Prepared::load(&args.data)?;
    let fit = fit_cell(&prepared.data, &est, args.alpha, args.lambda, &solver)?;
    let model = prepared.summarize(&fit);
    Report::new(cfg, FitOutput { model }).emit(args.out.as_deref())
}

#[derive(Debug, Serialize)]
struct CvOutput {
    alphas: Vec<f64>,
    lambdas: Vec<f64>,
    /// Rows follow `alphas`, columns follow `lambdas`; `null` marks a cell
    /// where a fit failed.
    score_matrix: Vec<Vec<f64>>,
    best_alpha: f64,
    best_lambda: f64,
    lambda_interior: bool,
    failed_fits: usize,
    model: ModelSummary,
}

pub fn cv(args: &CvArgs, threads: usize) -> CliResult<()> {
    let est = estimator(&args.model);
    let solver = solver(&args.solver)?;
    let cfg = RunConfig {
        command: "cv".into(),
        solver: Some(solver),
        seed: Some(args.seed),
        out: args.out.clone(),
        threads,
        ..RunConfig::default()
    };
    let cfg = with_grid(with_model(with_data(cfg, &args.data), &est, &args.model), &args.grid);

    let prepared = Prepared::load(&args.data)?;
    let data = &prepared.data;
    let grid = default_grid(data.n(), data.p(), args.grid.grid_alpha, args.grid.grid_lambda)?;
    let result = cross_validate(data, &grid, &cv_options(&args.grid), &est, &solver, args.seed)?;
    let fit = fit_cell(data, &est, result.best_alpha, result.best_lambda, &solver)?;
    let out = CvOutput {
        alphas: grid.alphas().to_vec(),
        lambdas: grid.lambdas().to_vec(),
        lambda_interior: result.lambda_is_interior(),
        score_matrix: result.score_matrix,
        best_alpha: result.best_alpha,
        best_lambda: result.best_lambda,
        failed_fits: result.failed_fits,
        model: prepared.summarize(&fit),
    };
    Report::new(cfg, out).emit(args.out.as_deref())
}

pub fn simulate(args: &SimulateArgs, threads: usize) -> CliResult<()> {
    let design = SimDesign::parse(&args.scenario)?;
    let laws = args
        .error_law
        .iter()
        .map(|l| ErrorLaw::parse(l.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let estimators = parse_estimators(&args.estimators)?;
    let solver = solver(&args.solver)?;
    let cfg = RunConfig {
        command: "simulate".into(),
        scenario: Some(args.scenario.clone()),
        error_law: Some(args.error_law.clone()),
        estimators: Some(estimators.iter().map(|e| e.to_string()).collect()),
        n: Some(args.n),
        p: Some(args.p),
        replicates: Some(args.replicates),
        solver: Some(solver),
        seed: Some(args.seed),
        out: args.out.clone(),
        threads,
        ..RunConfig::default()
    };
    let cfg = with_grid(cfg, &args.grid);

    let scenarios = laws
        .into_iter()
        .map(|law| SimScenario::new(design, law, args.n, args.p))
        .collect::<Result<Vec<_>, _>>()?;
    let plan = StudyPlan {
        scenarios,
        estimators,
        replicates: args.replicates,
        n_alpha: args.grid.grid_alpha,
        n_lambda: args.grid.grid_lambda,
        cv: cv_options(&args.grid),
        solver,
        master_seed: args.seed,
    };
    let summary: StudySummary = run_study(&plan)?;
    Report::new(cfg, summary).emit(args.out.as_deref())
}

/// The part of a `fit` or `cv` report that `predict` reads back.
#[derive(Debug, Deserialize)]
struct StoredReport {
    result: StoredResult,
}

#[derive(Debug, Deserialize)]
struct StoredResult {
    model: StoredModel,
}

#[derive(Debug, Deserialize)]
struct StoredModel {
    #[serde(default)]
    intercept: Option<f64>,
    coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
struct PredictOutput {
    predictions: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mspe: Option<f64>,
}

pub fn predict(args: &PredictArgs, threads: usize) -> CliResult<()> {
    let cfg = RunConfig {
        command: "predict".into(),
        model: Some(args.model.clone()),
        input: Some(args.input.clone()),
        response: args.response.clone(),
        out: args.out.clone(),
        threads,
        ..RunConfig::default()
    };
    let text = std::fs::read_to_string(&args.model).map_err(|source| PramError::Io {
        path: args.model.display().to_string(),
        source,
    })?;
    let stored: StoredReport = serde_json::from_str(&text)?;
    let model = stored.result.model;
    let table = io::read_table(&args.input)?;
    let column = |name: &str| {
        table
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Core(PramError::MissingColumn(name.to_string())))
    };

    let cols = model
        .coefficients
        .keys()
        .map(|name| column(name))
        .collect::<CliResult<Vec<usize>>>()?;
    let beta: Vec<f64> = model.coefficients.values().copied().collect();
    let design = DMatrix::from_fn(table.rows.len(), cols.len(), |i, k| table.rows[i][cols[k]]);
    let intercept = model.intercept.unwrap_or(0.0);
    let predictions: Vec<f64> = io::predict(&beta, &design)?
        .into_iter()
        .map(|v| v + intercept)
        .collect();

    let mspe = match &args.response {
        Some(name) => {
            let j = column(name)?;
            if predictions.is_empty() {
                return Err(CliError::Usage("no rows to score".into()));
            }
            let sum: f64 = table
                .rows
                .iter()
                .zip(&predictions)
                .map(|(row, p)| (row[j] - p).powi(2))
                .sum();
            Some(sum / predictions.len() as f64)
        }
        None => None,
    };
    Report::new(cfg, PredictOutput { predictions, mspe }).emit(args.out.as_deref())
}

#[derive(Debug, Serialize)]
struct RpeSummary {
    estimator: String,
    mean: Option<f64>,
    median: Option<f64>,
    failures: usize,
}

#[derive(Debug, Serialize)]
struct RpeOutput {
    summary: Vec<RpeSummary>,
    report: RpeReport,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        0.5 * (values[m - 1] + values[m])
    } else {
        values[m]
    })
}

pub fn rpe(args: &RpeArgs, threads: usize) -> CliResult<()> {
    let estimators = parse_estimators(&args.estimators)?;
    let baseline = Estimator::parse(args.baseline.trim())?;
    let solver = solver(&args.solver)?;
    let tuning = match (args.fixed_tuning, args.alpha, args.lambda) {
        (true, Some(alpha), Some(lambda)) => RpeTuning::Fixed { alpha, lambda },
        (true, _, _) => return Err(CliError::Usage("--fixed-tuning needs --alpha and --lambda".into())),
        (false, _, _) => RpeTuning::Search {
            n_alpha: args.grid.grid_alpha,
            n_lambda: args.grid.grid_lambda,
            cv: cv_options(&args.grid),
        },
    };
    let cfg = RunConfig {
        command: "rpe".into(),
        estimators: Some(estimators.iter().map(|e| e.to_string()).collect()),
        baseline: Some(baseline.to_string()),
        n_test: Some(args.n_test),
        splits: Some(args.splits),
        fixed_tuning: Some(args.fixed_tuning),
        alpha: args.alpha.filter(|_| args.fixed_tuning),
        lambda: args.lambda.filter(|_| args.fixed_tuning),
        solver: Some(solver),
        seed: Some(args.seed),
        out: args.out.clone(),
        threads,
        ..RunConfig::default()
    };
    let cfg = with_grid(with_data(cfg, &args.data), &args.grid);

    let prepared = Prepared::load(&args.data)?;
    let report = io::rpe_eval(
        &prepared.data,
        &estimators,
        &baseline,
        args.n_test,
        args.splits,
        &tuning,
        &solver,
        args.seed,
    )?;
    let summary = report
        .estimators
        .iter()
        .zip(&report.rpe)
        .zip(&report.failures)
        .map(|((name, values), &failures)| {
            let mut ok: Vec<f64> = values.iter().flatten().copied().collect();
            let mean = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
            RpeSummary {
                estimator: name.clone(),
                mean,
                median: median(&mut ok),
                failures,
            }
        })
        .collect();
    Report::new(cfg, RpeOutput { summary, report }).emit(args.out.as_deref())
}

#[derive(Debug, Serialize)]
struct PrescreenOutput {
    kept: Vec<String>,
    n: usize,
}

pub fn prescreen(args: &PrescreenArgs, threads: usize) -> CliResult<()> {
    let cfg = RunConfig {
        command: "prescreen".into(),
        input: Some(args.input.clone()),
        response: Some(args.response.clone()),
        p1: Some(args.p1),
        p2: Some(args.p2),
        out: Some(args.out.clone()),
        threads,
        ..RunConfig::default()
    };
    let data = io::load_csv(&args.input, &args.response)?;
    let kept = io::prescreen(&data, args.p1, args.p2)?;
    io::save_csv(&kept, &args.out, &args.response)?;
    let out = PrescreenOutput {
        kept: kept.column_names(),
        n: kept.n(),
    };
    Report::new(cfg, out).emit(None)
}
