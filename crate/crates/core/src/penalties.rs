//! Coordinate-separable amenable penalties and their smooth part.
//!
//! Every penalty is written as `ρ_λ(β) = λ‖β‖₁ − q_λ(β)` where `q_λ` is
//! differentiable everywhere. The solver handles `λ‖β‖₁` through its
//! proximal step and folds `−q_λ` into the smooth part of the objective.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_B: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    Lasso,
    Scad,
    Mcp,
}

impl PenaltyFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(Self::Lasso),
            "scad" => Ok(Self::Scad),
            "mcp" => Ok(Self::Mcp),
            other => invalid(format!("unknown penalty family {other:?}")),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::Scad => "scad",
            Self::Mcp => "mcp",
        }
    }

    /// Conventional shape parameter (`a` for SCAD, `b` for MCP).
    pub fn default_shape(self) -> f64 {
        match self {
            Self::Lasso => 0.0,
            Self::Scad => DEFAULT_SCAD_A,
            Self::Mcp => DEFAULT_MCP_B,
        }
    }
}

/// The constants `(μ, δ)`: `ρ_λ(t) + μt²/2` is convex and `ρ′_λ(t) = 0` for
/// `|t| ≥ δλ`. `δ` is infinite for the Lasso.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amenability {
    pub mu: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    family: PenaltyFamily,
    lambda: f64,
    shape: f64,
}

impl PenaltySpec {
    pub fn new(family: PenaltyFamily, lambda: f64, shape: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return invalid(format!("lambda must be nonnegative and finite, got {lambda}"));
        }
        match family {
            PenaltyFamily::Scad if !(shape.is_finite() && shape > 2.0) => {
                return invalid(format!("SCAD shape must exceed 2, got {shape}"))
            }
            PenaltyFamily::Mcp if !(shape.is_finite() && shape > 0.0) => {
                return invalid(format!("MCP shape must be positive, got {shape}"))
            }
            _ => {}
        }
        Ok(Self {
            family,
            lambda,
            shape,
        })
    }

    /// Family with its default shape.
    pub fn with_default_shape(family: PenaltyFamily, lambda: f64) -> Result<Self> {
        Self::new(family, lambda, family.default_shape())
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Lasso, lambda, 0.0)
    }

    pub fn scad(lambda: f64, a: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Scad, lambda, a)
    }

    pub fn mcp(lambda: f64, b: f64) -> Result<Self> {
        Self::new(PenaltyFamily::Mcp, lambda, b)
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Same family and shape at a different `λ`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.family, lambda, self.shape)
    }

    /// `ρ_λ(t)`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        let (lam, at) = (self.lambda, t.abs());
        match self.family {
            PenaltyFamily::Lasso => lam * at,
            PenaltyFamily::Scad => {
                let a = self.shape;
                if at <= lam {
                    lam * at
                } else if at <= a * lam {
                    -(at * at - 2.0 * a * lam * at + lam * lam) / (2.0 * (a - 1.0))
                } else {
                    (a + 1.0) * lam * lam / 2.0
                }
            }
            PenaltyFamily::Mcp => {
                let b = self.shape;
                if at <= b * lam {
                    lam * at - at * at / (2.0 * b)
                } else {
                    b * lam * lam / 2.0
                }
            }
        }
    }

    /// `ρ′_λ(t)`; at `t = 0` the right limit `λ` is returned.
    #[inline]
    pub fn deriv(&self, t: f64) -> f64 {
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let (lam, at) = (self.lambda, t.abs());
        let mag = match self.family {
            PenaltyFamily::Lasso => lam,
            PenaltyFamily::Scad => {
                let a = self.shape;
                if at <= lam {
                    lam
                } else if at <= a * lam {
                    (a * lam - at) / (a - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyFamily::Mcp => (lam - at / self.shape).max(0.0),
        };
        sign * mag
    }

    /// `q_λ(t) = λ|t| − ρ_λ(t)`.
    #[inline]
    pub fn q_value(&self, t: f64) -> f64 {
        let (lam, at) = (self.lambda, t.abs());
        match self.family {
            PenaltyFamily::Lasso => 0.0,
            PenaltyFamily::Scad => {
                let a = self.shape;
                if at <= lam {
                    0.0
                } else if at <= a * lam {
                    (at - lam) * (at - lam) / (2.0 * (a - 1.0))
                } else {
                    lam * at - (a + 1.0) * lam * lam / 2.0
                }
            }
            PenaltyFamily::Mcp => {
                let b = self.shape;
                if at <= b * lam {
                    at * at / (2.0 * b)
                } else {
                    lam * at - b * lam * lam / 2.0
                }
            }
        }
    }

    /// `q′_λ(t)`, continuous everywhere and zero at the origin.
    #[inline]
    pub fn q_deriv(&self, t: f64) -> f64 {
        let (lam, at) = (self.lambda, t.abs());
        let mag = match self.family {
            PenaltyFamily::Lasso => 0.0,
            PenaltyFamily::Scad => {
                let a = self.shape;
                if at <= lam {
                    0.0
                } else if at <= a * lam {
                    (at - lam) / (a - 1.0)
                } else {
                    lam
                }
            }
            PenaltyFamily::Mcp => (at / self.shape).min(lam),
        };
        mag.copysign(t)
    }

    pub fn amenability(&self) -> Amenability {
        match self.family {
            PenaltyFamily::Lasso => Amenability {
                mu: 0.0,
                delta: f64::INFINITY,
            },
            PenaltyFamily::Scad => Amenability {
                mu: 1.0 / (self.shape - 1.0),
                delta: self.shape,
            },
            PenaltyFamily::Mcp => Amenability {
                mu: 1.0 / self.shape,
                delta: self.shape,
            },
        }
    }
}

pub fn penalty_scalar(spec: &PenaltySpec, t: f64) -> f64 {
    spec.value(t)
}

pub fn penalty_deriv(spec: &PenaltySpec, t: f64) -> f64 {
    spec.deriv(t)
}

/// `Σⱼ ρ_λ(βⱼ)`.
pub fn penalty_vector(spec: &PenaltySpec, beta: &[f64]) -> f64 {
    beta.iter().map(|&t| spec.value(t)).sum()
}

/// `q_λ(β)` and `∇q_λ(β)`.
pub fn q_value_and_grad(spec: &PenaltySpec, beta: &[f64]) -> (f64, Vec<f64>) {
    let value = beta.iter().map(|&t| spec.q_value(t)).sum();
    let grad = beta.iter().map(|&t| spec.q_deriv(t)).collect();
    (value, grad)
}

pub fn amenability(spec: &PenaltySpec) -> Amenability {
    spec.amenability()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn scalar_examples() {
        assert_eq!(PenaltySpec::lasso(2.0).unwrap().value(-3.0), 6.0);
        let mcp = PenaltySpec::mcp(1.0, 3.0).unwrap();
        assert_relative_eq!(mcp.value(0.5), 0.5 - 0.25 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(mcp.value(0.5), 0.458333, epsilon = 1e-6);
        assert_relative_eq!(PenaltySpec::scad(1.0, 3.7).unwrap().value(10.0), 2.35, epsilon = 1e-14);
    }

    #[test]
    fn derivative_examples() {
        let mcp = PenaltySpec::mcp(1.0, 3.0).unwrap();
        assert_relative_eq!(mcp.deriv(0.5), 1.0 - 0.5 / 3.0, epsilon = 1e-15);
        assert_eq!(mcp.deriv(4.0), 0.0);
        assert_eq!(PenaltySpec::lasso(2.0).unwrap().deriv(-1.0), -2.0);
        assert_eq!(mcp.deriv(0.0), 1.0);
        let scad = PenaltySpec::scad(1.0, 3.7).unwrap();
        assert_eq!(scad.deriv(0.5), 1.0);
        assert_relative_eq!(scad.deriv(-2.0), -(3.7 - 2.0) / 2.7);
    }

    #[test]
    fn vector_and_q_examples() {
        let mcp = PenaltySpec::mcp(1.0, 3.0).unwrap();
        assert_eq!(penalty_vector(&mcp, &[0.0; 4]), 0.0);
        assert_eq!(penalty_vector(&PenaltySpec::lasso(1.0).unwrap(), &[1.0, -2.0, 0.0]), 3.0);
        assert_relative_eq!(penalty_vector(&mcp, &[0.5, 10.0]), 1.958333, epsilon = 1e-6);

        let (q, g) = q_value_and_grad(&PenaltySpec::lasso(0.7).unwrap(), &[1.0, -3.0]);
        assert_eq!((q, g), (0.0, vec![0.0, 0.0]));
        let (q, g) = q_value_and_grad(&mcp, &[0.5]);
        assert_relative_eq!(q, 0.25 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(g[0], 0.5 / 3.0, epsilon = 1e-15);
        assert_eq!(q_value_and_grad(&mcp, &[0.0]), (0.0, vec![0.0]));
    }

    #[test]
    fn amenability_constants() {
        let l = PenaltySpec::lasso(1.0).unwrap().amenability();
        assert_eq!((l.mu, l.delta), (0.0, f64::INFINITY));
        let m = PenaltySpec::mcp(1.0, 3.0).unwrap().amenability();
        assert_eq!((m.mu, m.delta), (1.0 / 3.0, 3.0));
        let s = PenaltySpec::scad(1.0, 3.7).unwrap().amenability();
        assert_eq!((s.mu, s.delta), (1.0 / 2.7, 3.7));
    }

    #[test]
    fn rejects_invalid_shapes() {
        assert!(PenaltySpec::scad(1.0, 2.0).is_err());
        assert!(PenaltySpec::mcp(1.0, 0.0).is_err());
        assert!(PenaltySpec::lasso(-1.0).is_err());
        assert!(PenaltySpec::lasso(0.0).is_ok());
    }

    fn specs(lam: f64) -> [PenaltySpec; 3] {
        [
            PenaltySpec::lasso(lam).unwrap(),
            PenaltySpec::scad(lam, 3.7).unwrap(),
            PenaltySpec::mcp(lam, 3.0).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn basic_shape_properties(t in 0.0f64..20.0, dt in 0.0f64..5.0, lam in 0.01f64..5.0) {
            for s in specs(lam) {
                prop_assert_eq!(s.value(t), s.value(-t));
                prop_assert!(s.value(t + dt) >= s.value(t) - 1e-12);
                if t > 0.0 {
                    prop_assert!(s.value(t + dt) / (t + dt) <= s.value(t) / t + 1e-12);
                }
            }
        }

        #[test]
        fn q_gradient_matches_finite_differences(t in -10.0f64..10.0, lam in 0.1f64..3.0) {
            let h = 1e-6;
            for s in specs(lam) {
                let fd = (s.q_value(t + h) - s.q_value(t - h)) / (2.0 * h);
                prop_assert!((fd - s.q_deriv(t)).abs() <= 1e-5);
            }
        }
    }
}
