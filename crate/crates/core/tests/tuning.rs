mod support;

use pram_core::simulation::{gen_dataset, ErrorLaw, SimDesign, SimScenario};
use pram_core::tuning::{
    cross_validate, cross_validate_many, default_grid, fold_assignment, CvOptions, StepOneMode, TuningGrid,
};
use pram_core::{Estimator, SolverConfig};
use support::*;

fn quadratic_lasso() -> Estimator {
    Estimator::parse("QA-Lasso").unwrap()
}

#[test]
fn noiseless_data_with_tiny_lambda_scores_near_zero() {
    let beta = sparse_beta(5, &[2.0, -1.0, 0.5]);
    let d = gaussian_data(300, 40, 5, &beta, 0.0);
    let grid = TuningGrid::new(vec![1.0, 2.0], vec![1e-9, 0.1, 1.0]).unwrap();
    let cfg = SolverConfig {
        tol: 1e-15,
        kkt_tol: 1e-12,
        max_iter: 100_000,
        ..SolverConfig::default()
    };
    let cv = cross_validate(&d, &grid, &CvOptions::default(), &quadratic_lasso(), &cfg, 1).unwrap();
    assert_eq!(cv.best_lambda, 1e-9);
    let best = cv.score_matrix[cv.best_index.0][cv.best_index.1];
    assert!(best < 1e-8, "{best}");
}

#[test]
fn huge_lambda_scores_the_trimmed_mean_of_held_out_squares() {
    let beta = sparse_beta(6, &[1.0, 1.0]);
    let d = gaussian_data(301, 30, 6, &beta, 1.0);
    let big = 1e3;
    let grid = TuningGrid::new(vec![1.0], vec![big]).unwrap();
    let options = CvOptions {
        folds: 5,
        trim: 0.2,
        ..CvOptions::default()
    };
    let cv = cross_validate(&d, &grid, &options, &quadratic_lasso(), &SolverConfig::default(), 9).unwrap();

    let fold = fold_assignment(d.n(), 5, 9);
    let mut expected = 0.0;
    for k in 0..5 {
        let mut sq: Vec<f64> = (0..d.n())
            .filter(|&i| fold[i] == k)
            .map(|i| d.response()[i] * d.response()[i])
            .collect();
        sq.sort_by(|a, b| a.total_cmp(b));
        let keep = sq.len() - (0.2 * sq.len() as f64).floor() as usize;
        let m = sq[..keep].iter().sum::<f64>() / keep as f64;
        expected += m / 5.0;
    }
    assert_eq!(cv.score_matrix[0][0], expected);
}

#[test]
fn cross_validation_is_deterministic() {
    let beta = sparse_beta(20, &[2.0, -2.0, 1.0]);
    let d = gaussian_data(302, 40, 20, &beta, 1.0);
    let grid = default_grid(40, 20, 3, 4).unwrap();
    let est = Estimator::parse("TA-MCP").unwrap();
    let a = cross_validate(&d, &grid, &CvOptions::default(), &est, &SolverConfig::default(), 5).unwrap();
    let b = cross_validate(&d, &grid, &CvOptions::default(), &est, &SolverConfig::default(), 5).unwrap();
    assert_eq!(a, b);
    let c = cross_validate(&d, &grid, &CvOptions::default(), &est, &SolverConfig::default(), 6).unwrap();
    assert_ne!(a.fold_assignment, c.fold_assignment);
}

#[test]
fn shared_first_stage_matches_separate_runs() {
    let beta = sparse_beta(25, &[2.0, -2.0, 1.0]);
    let d = gaussian_data(303, 40, 25, &beta, 1.0);
    let grid = default_grid(40, 25, 3, 3).unwrap();
    let names = ["HA-Lasso", "CA-MCP", "WTA-SCAD", "WHA-MCP"];
    let ests: Vec<Estimator> = names.iter().map(|n| Estimator::parse(n).unwrap()).collect();
    let cfg = SolverConfig::default();
    let opts = CvOptions::default();
    let many = cross_validate_many(&d, &grid, &opts, &ests, &cfg, 3).unwrap();
    for (e, joint) in ests.iter().zip(&many) {
        let single = cross_validate(&d, &grid, &opts, e, &cfg, 3).unwrap();
        assert_eq!(&single, joint, "{e}");
    }
}

#[test]
fn warm_started_path_agrees_with_cold_starts() {
    let beta = sparse_beta(30, &[2.0, -2.0, 1.5]);
    let d = gaussian_data(304, 50, 30, &beta, 1.0);
    let grid = default_grid(50, 30, 3, 5).unwrap();
    let cfg = SolverConfig {
        tol: 1e-13,
        kkt_tol: 1e-9,
        max_iter: 200_000,
        ..SolverConfig::default()
    };
    let est = Estimator::parse("HA-Lasso").unwrap();
    let warm = cross_validate(&d, &grid, &CvOptions::default(), &est, &cfg, 4).unwrap();
    let cold = cross_validate(
        &d,
        &grid,
        &CvOptions {
            warm_start: false,
            ..CvOptions::default()
        },
        &est,
        &cfg,
        4,
    )
    .unwrap();
    for (rw, rc) in warm.score_matrix.iter().zip(&cold.score_matrix) {
        for (w, c) in rw.iter().zip(rc) {
            assert!((w - c).abs() <= 1e-6 * c.abs().max(1.0), "{w} vs {c}");
        }
    }
    assert_eq!(warm.best_index, cold.best_index);
}

#[test]
fn fixed_first_stage_mode_runs() {
    let beta = sparse_beta(15, &[2.0, -2.0]);
    let d = gaussian_data(305, 30, 15, &beta, 1.0);
    let grid = default_grid(30, 15, 2, 3).unwrap();
    let opts = CvOptions {
        step_one: StepOneMode::Fixed {
            alpha: 2.0,
            lambda: 0.1,
        },
        ..CvOptions::default()
    };
    let est = Estimator::parse("CA-MCP").unwrap();
    let cv = cross_validate(&d, &grid, &opts, &est, &SolverConfig::default(), 2).unwrap();
    assert_eq!(cv.failed_fits, 0);
    assert!(cv.score_matrix.iter().flatten().all(|s| s.is_finite()));

    let bad = CvOptions {
        step_one: StepOneMode::Fixed {
            alpha: -1.0,
            lambda: 0.1,
        },
        ..CvOptions::default()
    };
    assert!(cross_validate(&d, &grid, &bad, &est, &SolverConfig::default(), 2).is_err());
}

#[test]
fn rejects_bad_options() {
    let d = gaussian_data(306, 8, 3, &[1.0, 0.0, 0.0], 1.0);
    let grid = default_grid(8, 3, 2, 2).unwrap();
    let est = quadratic_lasso();
    let cfg = SolverConfig::default();
    let folds = |k| CvOptions {
        folds: k,
        ..CvOptions::default()
    };
    assert!(cross_validate(&d, &grid, &folds(1), &est, &cfg, 0).is_err());
    assert!(cross_validate(&d, &grid, &folds(9), &est, &cfg, 0).is_err());
    let trim = CvOptions {
        trim: 0.5,
        ..CvOptions::default()
    };
    assert!(cross_validate(&d, &grid, &trim, &est, &cfg, 0).is_err());
}

#[test]
fn benchmark_design_selects_interior_lambda() {
    let scenario = SimScenario::new(SimDesign::HomogeneousGaussian, ErrorLaw::Normal04, 100, 500).unwrap();
    let grid = default_grid(100, 500, 10, 10).unwrap();
    let est = Estimator::parse("HA-Lasso").unwrap();
    let mut interior = 0;
    for seed in 0..10u64 {
        let (data, _) = gen_dataset(&scenario, &mut rng(400 + seed)).unwrap();
        let cv = cross_validate(&data, &grid, &CvOptions::default(), &est, &SolverConfig::default(), seed).unwrap();
        if cv.lambda_is_interior() {
            interior += 1;
        }
    }
    assert!(interior >= 8, "{interior} of 10");
}
