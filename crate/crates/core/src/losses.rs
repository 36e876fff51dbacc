//! Robust approximations of the quadratic loss.
//!
//! Each family `l_α` has a robustness parameter `α > 0` and satisfies
//! `l_α(u) → u²/2` as `α → ∞`:
//!
//! | family    | `l_α(u)`                                          |
//! |-----------|---------------------------------------------------|
//! | Huber     | `u²/2` on `|u| ≤ α`, else `α|u| − α²/2`           |
//! | Tukey     | `α²/6·(1 − (1 − u²/α²)³)` on `|u| ≤ α`, else `α²/6` |
//! | Cauchy    | `α²/2·log(1 + u²/α²)`                             |
//! | Quadratic | `u²/2` (the `α → ∞` limit, `α` ignored)           |
//!
//! The empirical loss allows a pair of row weights `(w, v)`:
//! `L(β) = (1/n) Σ w(xᵢ)/v(xᵢ) · l_α((yᵢ − xᵢᵀβ)·v(xᵢ))`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_len, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    Huber,
    Tukey,
    Cauchy,
    Quadratic,
}

impl LossFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "huber" => Ok(Self::Huber),
            "tukey" => Ok(Self::Tukey),
            "cauchy" => Ok(Self::Cauchy),
            "quadratic" => Ok(Self::Quadratic),
            other => invalid(format!("unknown loss family {other:?}")),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Huber => "huber",
            Self::Tukey => "tukey",
            Self::Cauchy => "cauchy",
            Self::Quadratic => "quadratic",
        }
    }
}

/// A loss family together with its robustness parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    family: LossFamily,
    alpha: f64,
}

impl LossSpec {
    /// `alpha` must be finite and positive unless the family is quadratic.
    pub fn new(family: LossFamily, alpha: f64) -> Result<Self> {
        if family != LossFamily::Quadratic && !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("alpha must be positive and finite, got {alpha}"));
        }
        Ok(Self { family, alpha })
    }

    pub fn huber(alpha: f64) -> Result<Self> {
        Self::new(LossFamily::Huber, alpha)
    }

    pub fn quadratic() -> Self {
        Self {
            family: LossFamily::Quadratic,
            alpha: f64::INFINITY,
        }
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `l_α(u)`.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        let a = self.alpha;
        match self.family {
            LossFamily::Quadratic => 0.5 * u * u,
            LossFamily::Huber => {
                let au = u.abs();
                if au <= a {
                    0.5 * u * u
                } else {
                    a * au - 0.5 * a * a
                }
            }
            LossFamily::Tukey => {
                if u.abs() < a {
                    // α²/6·(1 − (1 − z)³) expanded as u²/6·(3 − 3z + z²) so the
                    // large-α limit does not cancel.
                    let z = (u / a) * (u / a);
                    u * u / 6.0 * (3.0 - 3.0 * z + z * z)
                } else {
                    a * a / 6.0
                }
            }
            LossFamily::Cauchy => {
                let r = u / a;
                0.5 * a * a * (r * r).ln_1p()
            }
        }
    }

    /// `l′_α(u)`, the ψ-function.
    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        let a = self.alpha;
        match self.family {
            LossFamily::Quadratic => u,
            LossFamily::Huber => u.clamp(-a, a),
            LossFamily::Tukey => {
                if u.abs() < a {
                    let s = 1.0 - (u / a) * (u / a);
                    u * s * s
                } else {
                    0.0
                }
            }
            LossFamily::Cauchy => {
                let r = u / a;
                u / (1.0 + r * r)
            }
        }
    }

    /// `l″_α(u)`. At the Huber and Tukey kinks `|u| = α` the interior-branch
    /// value is returned.
    #[inline]
    pub fn second_deriv(&self, u: f64) -> f64 {
        let a = self.alpha;
        match self.family {
            LossFamily::Quadratic => 1.0,
            LossFamily::Huber => {
                if u.abs() <= a {
                    1.0
                } else {
                    0.0
                }
            }
            LossFamily::Tukey => {
                if u.abs() <= a {
                    let z = (u / a) * (u / a);
                    (1.0 - z) * (1.0 - 5.0 * z)
                } else {
                    0.0
                }
            }
            LossFamily::Cauchy => {
                let z = (u / a) * (u / a);
                (1.0 - z) / ((1.0 + z) * (1.0 + z))
            }
        }
    }
}

fn check_finite(u: f64) -> Result<()> {
    if u.is_finite() {
        Ok(())
    } else {
        invalid(format!("residual must be finite, got {u}"))
    }
}

pub fn loss_value(spec: &LossSpec, u: f64) -> Result<f64> {
    check_finite(u)?;
    Ok(spec.value(u))
}

pub fn loss_deriv(spec: &LossSpec, u: f64) -> Result<f64> {
    check_finite(u)?;
    Ok(spec.deriv(u))
}

pub fn loss_second_deriv(spec: &LossSpec, u: f64) -> Result<f64> {
    check_finite(u)?;
    Ok(spec.second_deriv(u))
}

/// Row weighting `(w, v)`. Both kinds use `v ≡ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Unweighted,
    /// `w(x) = min{1, cap/‖x‖∞}`.
    InfinityCap { cap: f64 },
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self::Unweighted
    }
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::InfinityCap { cap } if !(cap.is_finite() && cap > 0.0) => {
                invalid(format!("weight cap must be positive, got {cap}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_weighted(&self) -> bool {
        !matches!(self, WeightSpec::Unweighted)
    }

    #[inline]
    fn from_sup_norm(&self, sup: f64) -> (f64, f64) {
        match *self {
            WeightSpec::Unweighted => (1.0, 1.0),
            WeightSpec::InfinityCap { cap } => {
                if sup == 0.0 {
                    (1.0, 1.0)
                } else {
                    ((cap / sup).min(1.0), 1.0)
                }
            }
        }
    }
}

/// Evaluates `(w(x), v(x))` for one covariate row.
pub fn weight_eval(spec: &WeightSpec, row: &[f64]) -> Result<(f64, f64)> {
    spec.validate()?;
    if row.iter().any(|v| !v.is_finite()) {
        return invalid("covariate row contains non-finite entries");
    }
    let sup = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(spec.from_sup_norm(sup))
}

/// Per-row `(w, v)` precomputed from a design.
#[derive(Debug, Clone, PartialEq)]
pub struct RowWeights {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

impl RowWeights {
    pub fn compute(data: &Dataset, spec: &WeightSpec) -> Result<Self> {
        spec.validate()?;
        let n = data.n();
        let mut sup = vec![0.0_f64; n];
        if spec.is_weighted() {
            for j in 0..data.p() {
                for (s, x) in sup.iter_mut().zip(data.column(j)) {
                    *s = s.max(x.abs());
                }
            }
        }
        let (w, v) = sup.iter().map(|&s| spec.from_sup_norm(s)).unzip();
        Ok(Self { w, v })
    }
}

/// Weighted empirical loss bound to a dataset.
///
/// The solver works on fitted values `Xβ` directly so one matrix product per
/// trial point is enough to get both the loss and the gradient.
#[derive(Debug, Clone)]
pub struct EmpiricalLoss<'a> {
    data: &'a Dataset,
    spec: LossSpec,
    weights: RowWeights,
}

impl<'a> EmpiricalLoss<'a> {
    pub fn new(data: &'a Dataset, spec: LossSpec, weights: &WeightSpec) -> Result<Self> {
        let weights = RowWeights::compute(data, weights)?;
        Ok(Self {
            data,
            spec,
            weights,
        })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn spec(&self) -> &LossSpec {
        &self.spec
    }

    pub fn weights(&self) -> &RowWeights {
        &self.weights
    }

    /// Loss given `Xβ`.
    pub fn value_at_fitted(&self, fitted: &[f64]) -> f64 {
        let y = self.data.response().as_slice();
        let (w, v) = (&self.weights.w, &self.weights.v);
        let total: f64 = (0..fitted.len())
            .map(|i| w[i] / v[i] * self.spec.value((y[i] - fitted[i]) * v[i]))
            .sum();
        total / fitted.len() as f64
    }

    /// Gradient given `Xβ`, written into `grad`. `scratch` must have length n.
    pub fn gradient_at_fitted(&self, fitted: &[f64], scratch: &mut [f64], grad: &mut [f64]) {
        let y = self.data.response().as_slice();
        let (w, v) = (&self.weights.w, &self.weights.v);
        let scale = -1.0 / fitted.len() as f64;
        for i in 0..fitted.len() {
            scratch[i] = scale * w[i] * self.spec.deriv((y[i] - fitted[i]) * v[i]);
        }
        self.data.transpose_mul_into(scratch, grad);
    }

    pub fn value(&self, beta: &[f64]) -> Result<f64> {
        let fitted = self.data.fitted(beta)?;
        Ok(self.value_at_fitted(&fitted))
    }

    pub fn gradient(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let fitted = self.data.fitted(beta)?;
        let mut scratch = vec![0.0; self.data.n()];
        let mut grad = vec![0.0; self.data.p()];
        self.gradient_at_fitted(&fitted, &mut scratch, &mut grad);
        Ok(grad)
    }
}

/// `(1/n) Σ w(xᵢ)/v(xᵢ) · l_α((yᵢ − xᵢᵀβ)·v(xᵢ))`.
pub fn empirical_loss(
    data: &Dataset,
    beta: &[f64],
    loss: &LossSpec,
    weights: &WeightSpec,
) -> Result<f64> {
    check_len(data.p(), beta.len())?;
    EmpiricalLoss::new(data, *loss, weights)?.value(beta)
}

/// `−(1/n) Σ w(xᵢ) · l′_α((yᵢ − xᵢᵀβ)·v(xᵢ)) · xᵢ`.
pub fn empirical_gradient(
    data: &Dataset,
    beta: &[f64],
    loss: &LossSpec,
    weights: &WeightSpec,
) -> Result<Vec<f64>> {
    check_len(data.p(), beta.len())?;
    EmpiricalLoss::new(data, *loss, weights)?.gradient(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(f: LossFamily, a: f64) -> LossSpec {
        LossSpec::new(f, a).unwrap()
    }

    const ROBUST: [LossFamily; 3] = [LossFamily::Huber, LossFamily::Tukey, LossFamily::Cauchy];

    #[test]
    fn worked_values() {
        assert_eq!(spec(LossFamily::Huber, 1.0).value(0.5), 0.125);
        assert_eq!(spec(LossFamily::Huber, 1.0).value(2.0), 1.5);
        assert_relative_eq!(spec(LossFamily::Tukey, 1.0).value(2.0), 1.0 / 6.0);
        assert_relative_eq!(
            spec(LossFamily::Cauchy, 1.0).value(1.0),
            0.5 * 2f64.ln(),
            max_relative = 1e-15
        );
        assert_relative_eq!(spec(LossFamily::Cauchy, 1.0).value(1.0), 0.346574, epsilon = 1e-6);
    }

    #[test]
    fn worked_derivatives() {
        assert_eq!(spec(LossFamily::Huber, 1.0).deriv(2.0), 1.0);
        assert_relative_eq!(spec(LossFamily::Tukey, 1.0).deriv(0.5), 0.28125);
        assert_relative_eq!(spec(LossFamily::Cauchy, 1.0).deriv(3.0), 0.3, epsilon = 1e-15);
        assert_eq!(spec(LossFamily::Cauchy, 1.0).second_deriv(0.0), 1.0);
        assert_eq!(spec(LossFamily::Huber, 1.0).second_deriv(2.0), 0.0);
        assert_relative_eq!(spec(LossFamily::Tukey, 2.0).second_deriv(1.0), -0.1875);
    }

    #[test]
    fn tukey_expanded_form_matches_textbook_form() {
        let s = spec(LossFamily::Tukey, 1.7);
        for &u in &[0.0, 0.3, -1.1, 1.69] {
            let z: f64 = 1.0 - (u / 1.7f64).powi(2);
            let textbook = 1.7f64.powi(2) / 6.0 * (1.0 - z.powi(3));
            assert_relative_eq!(s.value(u), textbook, epsilon = 1e-14);
        }
    }

    #[test]
    fn kinks_use_interior_branch() {
        assert_eq!(spec(LossFamily::Huber, 1.5).second_deriv(1.5), 1.0);
        assert_eq!(spec(LossFamily::Huber, 1.5).second_deriv(-1.5), 1.0);
        assert_eq!(spec(LossFamily::Tukey, 1.5).second_deriv(1.5), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(LossSpec::new(LossFamily::Huber, 0.0).is_err());
        assert!(LossSpec::new(LossFamily::Cauchy, -1.0).is_err());
        assert!(LossSpec::new(LossFamily::Tukey, f64::NAN).is_err());
        assert!(LossSpec::new(LossFamily::Quadratic, 0.0).is_ok());
        assert!(loss_value(&spec(LossFamily::Huber, 1.0), f64::INFINITY).is_err());
        assert!(loss_deriv(&spec(LossFamily::Huber, 1.0), f64::NAN).is_err());
        assert!(weight_eval(&WeightSpec::InfinityCap { cap: 0.0 }, &[1.0]).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(weight_eval(&WeightSpec::Unweighted, &[100.0]).unwrap(), (1.0, 1.0));
        let cap = WeightSpec::InfinityCap { cap: 4.0 };
        assert_eq!(weight_eval(&cap, &[1.0, -8.0]).unwrap(), (0.5, 1.0));
        assert_eq!(weight_eval(&cap, &[2.0, -1.0]).unwrap(), (1.0, 1.0));
        assert_eq!(weight_eval(&cap, &[0.0, 0.0]).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn empirical_loss_examples() {
        let d = Dataset::from_rows(&[vec![1.0]], &[2.0]).unwrap();
        let q = LossSpec::quadratic();
        assert_eq!(empirical_loss(&d, &[2.0], &q, &WeightSpec::Unweighted).unwrap(), 0.0);

        // residuals 0.5 and 2 at β = 0
        let d = Dataset::from_rows(&[vec![1.0], vec![1.0]], &[0.5, 2.0]).unwrap();
        let h = spec(LossFamily::Huber, 1.0);
        let l = empirical_loss(&d, &[0.0], &h, &WeightSpec::Unweighted).unwrap();
        assert_relative_eq!(l, 0.8125);
        assert!(empirical_loss(&d, &[0.0, 1.0], &h, &WeightSpec::Unweighted).is_err());
    }

    #[test]
    fn quadratic_gradient_is_least_squares_gradient() {
        let d = Dataset::from_rows(
            &[vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.0]],
            &[1.0, 2.0, -1.0],
        )
        .unwrap();
        let beta = [0.3, -0.2];
        let g = empirical_gradient(&d, &beta, &LossSpec::quadratic(), &WeightSpec::Unweighted)
            .unwrap();
        let r = d.response() - d.design() * nalgebra::DVector::from_column_slice(&beta);
        let expected = -(d.design().transpose() * r) / 3.0;
        for j in 0..2 {
            assert_relative_eq!(g[j], expected[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_residuals_give_zero_gradient() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[5.0, 11.0]).unwrap();
        for f in ROBUST {
            let g = empirical_gradient(&d, &[1.0, 2.0], &spec(f, 0.7), &WeightSpec::Unweighted)
                .unwrap();
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    proptest! {
        #[test]
        fn symmetry_and_majorization(u in -50.0f64..50.0, a in 0.05f64..20.0) {
            for f in ROBUST {
                let s = spec(f, a);
                prop_assert_eq!(s.value(u), s.value(-u));
                prop_assert_eq!(s.deriv(u), -s.deriv(-u));
                prop_assert!(s.value(u) <= 0.5 * u * u * (1.0 + 1e-12));
                prop_assert!(s.value(u) >= 0.0);
            }
        }

        #[test]
        fn bounded_psi(u in -100.0f64..100.0, a in 0.05f64..20.0) {
            let tukey_bound = 16.0 * a / (25.0 * 5f64.sqrt());
            prop_assert!(spec(LossFamily::Huber, a).deriv(u).abs() <= a);
            prop_assert!(spec(LossFamily::Tukey, a).deriv(u).abs() <= tukey_bound * (1.0 + 1e-12));
            prop_assert!(spec(LossFamily::Cauchy, a).deriv(u).abs() <= a / 2.0 * (1.0 + 1e-12));
        }

        #[test]
        fn psi_is_one_lipschitz(x in -30.0f64..30.0, y in -30.0f64..30.0, a in 0.05f64..20.0) {
            for f in ROBUST {
                let s = spec(f, a);
                prop_assert!((s.deriv(x) - s.deriv(y)).abs() <= (x - y).abs() * (1.0 + 1e-12) + 1e-15);
            }
        }

        #[test]
        fn gap_to_quadratic_shrinks_with_alpha(u in -20.0f64..20.0) {
            let alphas = [u.abs().max(1e-3), 2.0 * u.abs() + 1e-3, 10.0 * u.abs() + 1.0, 1e3, 1e6];
            for f in ROBUST {
                let gaps: Vec<f64> = alphas.iter().map(|&a| (spec(f, a).value(u) - 0.5 * u * u).abs()).collect();
                for w in gaps.windows(2) {
                    prop_assert!(w[1] <= w[0] + 1e-12 * u * u);
                }
            }
        }
    }
}
