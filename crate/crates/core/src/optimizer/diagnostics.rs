use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_len, invalid, PramError, Result};
use crate::losses::{EmpiricalLoss, LossSpec, WeightSpec};
use crate::penalties::PenaltySpec;

/// Largest condition number accepted for the plug-in Hessian block.
const MAX_CONDITION: f64 = 1e12;

/// Stationarity measure for `L̄(β) + λ‖β‖₁` over `‖β‖₁ ≤ R`.
///
/// With the constraint inactive this is the ℓ∞ norm of the minimal-norm
/// element of `∇L̄(β) + λ∂‖β‖₁`; zero coordinates contribute
/// `max(0, |gⱼ| − λ)`. On the boundary the multiplier `ν ≥ 0` of the ball is
/// chosen to minimize that norm with `λ` replaced by `λ + ν`.
pub fn kkt_residual(
    data: &Dataset,
    beta: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    weights: &WeightSpec,
    radius: f64,
) -> Result<f64> {
    check_len(data.p(), beta.len())?;
    let norm: f64 = beta.iter().map(|b| b.abs()).sum();
    if norm > radius + 1e-8 {
        return invalid(format!("beta has l1 norm {norm} above radius {radius}"));
    }
    let mut grad = EmpiricalLoss::new(data, *loss, weights)?.gradient(beta)?;
    for (g, &b) in grad.iter_mut().zip(beta) {
        *g -= penalty.q_deriv(b);
    }
    Ok(kkt_from_gradient(beta, &grad, penalty.lambda(), radius))
}

fn residual_at(beta: &[f64], grad: &[f64], level: f64) -> f64 {
    beta.iter()
        .zip(grad)
        .map(|(&b, &g)| {
            if b != 0.0 {
                (g + level * b.signum()).abs()
            } else {
                (g.abs() - level).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn kkt_from_gradient(beta: &[f64], grad: &[f64], lambda: f64, radius: f64) -> f64 {
    let free = residual_at(beta, grad, lambda);
    let norm: f64 = beta.iter().map(|b| b.abs()).sum();
    if norm < radius * (1.0 - 1e-9) {
        return free;
    }
    // Convex in ν; golden-section search on a bracket past every breakpoint.
    let g_max = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let (mut lo, mut hi) = (0.0, g_max + lambda + 1.0);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let f = |nu: f64| residual_at(beta, grad, lambda + nu);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    free.min(f1.min(f2)).min(f(0.5 * (lo + hi)))
}

/// Plug-in sandwich variance `ν_Sᵀ D⁻¹ V D⁻¹ ν_S` on the support `S` of
/// `beta_hat`, where `D = (1/n) Σ l″(rᵢ) x_{iS} x_{iS}ᵀ` and `V` is the sample
/// covariance of `l′(rᵢ) x_{iS}` at the fitted residuals. Unweighted only.
pub fn plugin_variance(
    data: &Dataset,
    beta_hat: &[f64],
    loss: &LossSpec,
    nu: &[f64],
) -> Result<f64> {
    check_len(data.p(), beta_hat.len())?;
    check_len(data.p(), nu.len())?;
    let support: Vec<usize> = (0..data.p()).filter(|&j| beta_hat[j] != 0.0).collect();
    if support.is_empty() {
        return invalid("plug-in variance needs a nonempty support");
    }
    let n = data.n();
    if n < 2 {
        return invalid("plug-in variance needs at least two observations");
    }
    let nu_s = DVector::from_iterator(support.len(), support.iter().map(|&j| nu[j]));
    if nu_s.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }

    let fitted = data.fitted(beta_hat)?;
    let x_s = data.design().select_columns(support.iter());
    let resid: Vec<f64> = data
        .response()
        .iter()
        .zip(&fitted)
        .map(|(y, f)| y - f)
        .collect();

    let curv = DVector::from_iterator(n, resid.iter().map(|&r| loss.second_deriv(r)));
    let psi = DVector::from_iterator(n, resid.iter().map(|&r| loss.deriv(r)));

    let weighted = DMatrix::from_fn(n, support.len(), |i, k| curv[i] * x_s[(i, k)]);
    let hessian = x_s.transpose() * weighted / n as f64;

    let mut scores = DMatrix::from_fn(n, support.len(), |i, k| psi[i] * x_s[(i, k)]);
    let means = scores.row_mean();
    for mut row in scores.row_iter_mut() {
        row -= &means;
    }
    let meat = scores.transpose() * &scores / (n - 1) as f64;

    let sv = hessian.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(PramError::SingularMatrix { condition });
    }
    let h = hessian
        .lu()
        .solve(&nu_s)
        .ok_or(PramError::SingularMatrix { condition })?;
    Ok((h.transpose() * meat * &h)[(0, 0)].max(0.0))
}

/// Terms of the restricted strong convexity inequality for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RscProbe {
    /// `⟨∇L(β₁) − ∇L(β₂), β₁ − β₂⟩`.
    pub lhs: f64,
    /// `‖β₁ − β₂‖₂²`.
    pub l2_gap: f64,
    /// `‖β₁ − β₂‖₁²`.
    pub l1_gap: f64,
}

pub fn rsc_probe(
    data: &Dataset,
    loss: &LossSpec,
    weights: &WeightSpec,
    beta1: &[f64],
    beta2: &[f64],
) -> Result<RscProbe> {
    check_len(data.p(), beta1.len())?;
    check_len(data.p(), beta2.len())?;
    let objective = EmpiricalLoss::new(data, *loss, weights)?;
    let g1 = objective.gradient(beta1)?;
    let g2 = objective.gradient(beta2)?;
    let mut lhs = 0.0;
    let mut l2 = 0.0;
    let mut l1 = 0.0;
    for j in 0..data.p() {
        let d = beta1[j] - beta2[j];
        lhs += (g1[j] - g2[j]) * d;
        l2 += d * d;
        l1 += d.abs();
    }
    Ok(RscProbe {
        lhs,
        l2_gap: l2,
        l1_gap: l1 * l1,
    })
}
