//! Reference computations that share no code with the library's solver path.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pram_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Gaussian design with `y = X β + σ ε`.
pub fn gaussian_data(seed: u64, n: usize, p: usize, beta: &[f64], sigma: f64) -> Dataset {
    let mut r = rng(seed);
    let x = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
    let b = DVector::from_column_slice(beta);
    let noise = DVector::from_vec(normals(&mut r, n));
    let y = &x * b + noise * sigma;
    Dataset::new(x, y).unwrap()
}

pub fn sparse_beta(p: usize, values: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; p];
    b[..values.len()].copy_from_slice(values);
    b
}

fn soft(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

/// Cyclic coordinate descent for `(1/2n)‖y − Xβ‖² + λ‖β‖₁`.
pub fn cd_lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, tol: f64) -> Vec<f64> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared() / nf).collect();
    let mut beta = vec![0.0; p];
    let mut resid = y.clone();
    for _ in 0..200_000 {
        let mut max_delta: f64 = 0.0;
        for j in 0..p {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let rho = col.dot(&resid) / nf + col_sq[j] * beta[j];
            let new = soft(rho, lambda) / col_sq[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                resid.axpy(-delta, &col, 1.0);
                beta[j] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < tol {
            break;
        }
    }
    beta
}

/// Sup-norm violation of the Lasso optimality conditions for
/// `(1/2n)‖y − Xβ‖² + λ‖β‖₁`.
pub fn lasso_kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64], lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let r = y - x * DVector::from_column_slice(beta);
    let corr = x.transpose() * r / n;
    beta.iter()
        .zip(corr.iter())
        .map(|(&b, &c)| {
            if b != 0.0 {
                (c - lambda * b.signum()).abs()
            } else {
                (c.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Least squares through the SVD.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let svd = x.clone().svd(true, true);
    svd.solve(y, 1e-12).unwrap().iter().copied().collect()
}

/// Central differences of `f` at `x`.
pub fn finite_diff<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            probe[j] = x[j] + h;
            let up = f(&probe);
            probe[j] = x[j] - h;
            let down = f(&probe);
            probe[j] = x[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Minimizer of `½(b − v)² + κ|b|` over the grid `{−B, −B + step, …, B}`.
pub fn grid_prox_1d(v: f64, kappa: f64, step: f64, bound: f64) -> f64 {
    let k = (2.0 * bound / step).round() as i64;
    (0..=k)
        .map(|i| -bound + i as f64 * step)
        .map(|b| (b, 0.5 * (b - v).powi(2) + kappa * b.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

pub fn prox_objective(b: &[f64], v: &[f64], kappa: f64) -> f64 {
    b.iter()
        .zip(v)
        .map(|(bi, vi)| 0.5 * (bi - vi).powi(2) + kappa * bi.abs())
        .sum()
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// A random point of the ℓ1 ball of radius `radius` near `center`: a
/// perturbation followed by radial scaling back into the ball.
pub fn feasible_perturbation(r: &mut ChaCha8Rng, center: &[f64], scale: f64, radius: f64) -> Vec<f64> {
    let mut q: Vec<f64> = center
        .iter()
        .map(|c| {
            let z: f64 = r.sample(StandardNormal);
            c + scale * z
        })
        .collect();
    let norm = l1(&q);
    if norm > radius {
        q.iter_mut().for_each(|x| *x *= radius / norm);
    }
    q
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Mean and standard deviation of the sample.
pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var)
}
