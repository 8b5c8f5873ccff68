use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64, String> + Send + Sync>;
/// Writes a vector (gradient) or a row-major matrix (Hessian) into the buffer.
pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) -> Result<(), String> + Send + Sync>;

#[derive(Clone)]
pub enum ConfinementKind {
    /// `U = κ|x|²/2`.
    Quadratic { kappa: f64 },
    /// `U = a|x|⁴/4 − b|x|²/2`.
    DoubleWell { a: f64, b: f64 },
    Custom {
        value: ScalarFn,
        gradient: FieldFn,
        hessian: FieldFn,
    },
}

impl fmt::Debug for ConfinementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfinementKind::Quadratic { kappa } => write!(f, "Quadratic {{ kappa: {kappa} }}"),
            ConfinementKind::DoubleWell { a, b } => write!(f, "DoubleWell {{ a: {a}, b: {b} }}"),
            ConfinementKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// Declared weak-convexity data: `∇²U ≥ κ` outside the ball of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convexity {
    pub kappa: f64,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct ConfinementPotential {
    kind: ConfinementKind,
    convexity: Option<Convexity>,
}

impl ConfinementPotential {
    pub fn quadratic(kappa: f64) -> Self {
        ConfinementPotential {
            kind: ConfinementKind::Quadratic { kappa },
            convexity: Some(Convexity { kappa, radius: 0.0 }),
        }
    }

    pub fn double_well(a: f64, b: f64) -> Self {
        ConfinementPotential {
            kind: ConfinementKind::DoubleWell { a, b },
            convexity: None,
        }
    }

    pub fn custom(value: ScalarFn, gradient: FieldFn, hessian: FieldFn) -> Self {
        ConfinementPotential {
            kind: ConfinementKind::Custom {
                value,
                gradient,
                hessian,
            },
            convexity: None,
        }
    }

    pub fn with_convexity(mut self, kappa: f64, radius: f64) -> Self {
        self.convexity = Some(Convexity { kappa, radius });
        self
    }

    pub fn kind(&self) -> &ConfinementKind {
        &self.kind
    }

    pub fn convexity(&self) -> Option<Convexity> {
        self.convexity
    }

    /// `κ_U` for the quadratic kind.
    pub fn quadratic_kappa(&self) -> Option<f64> {
        match self.kind {
            ConfinementKind::Quadratic { kappa } => Some(kappa),
            _ => None,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match &self.kind {
            ConfinementKind::Quadratic { kappa } => Ok(0.5 * kappa * r2),
            ConfinementKind::DoubleWell { a, b } => Ok(0.25 * a * r2 * r2 - 0.5 * b * r2),
            ConfinementKind::Custom { value, .. } => value(x).map_err(Error::Callable),
        }
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.kind {
            ConfinementKind::Quadratic { kappa } => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = kappa * v;
                }
                Ok(())
            }
            ConfinementKind::DoubleWell { a, b } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let c = a * r2 - b;
                for (o, v) in out.iter_mut().zip(x) {
                    *o = c * v;
                }
                Ok(())
            }
            ConfinementKind::Custom { gradient, .. } => gradient(x, out).map_err(Error::Callable),
        }
    }

    /// Row-major Hessian.
    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = x.len();
        match &self.kind {
            ConfinementKind::Quadratic { kappa } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for i in 0..d {
                    out[i * d + i] = *kappa;
                }
                Ok(())
            }
            ConfinementKind::DoubleWell { a, b } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                for i in 0..d {
                    for j in 0..d {
                        let diag = if i == j { a * r2 - b } else { 0.0 };
                        out[i * d + j] = diag + 2.0 * a * x[i] * x[j];
                    }
                }
                Ok(())
            }
            ConfinementKind::Custom { hessian, .. } => hessian(x, out).map_err(Error::Callable),
        }
    }

    /// `(U(x), ∇U(x), ∇²U(x))`.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let d = x.len();
        let mut g = vec![0.0; d];
        let mut h = vec![0.0; d * d];
        let u = self.value(x)?;
        self.gradient_into(x, &mut g)?;
        self.hessian_into(x, &mut h)?;
        Ok((u, g, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_examples() {
        let (u, g, h) = ConfinementPotential::quadratic(1.0).eval(&[2.0, 0.0]).unwrap();
        assert_eq!(u, 2.0);
        assert_eq!(g, vec![2.0, 0.0]);
        assert_eq!(h, vec![1.0, 0.0, 0.0, 1.0]);
        let (u, g, h) = ConfinementPotential::quadratic(3.0).eval(&[0.0, 0.0]).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
        assert_eq!(h, vec![3.0, 0.0, 0.0, 3.0]);
    }

    #[test]
    fn double_well_critical_points_and_hessian() {
        let p = ConfinementPotential::double_well(1.0, 1.0);
        for x in [1.0, -1.0, 0.0] {
            let (_, g, _) = p.eval(&[x]).unwrap();
            assert_eq!(g[0], 0.0);
        }
        assert_eq!(p.value(&[1.0]).unwrap(), -0.25);
        // Hessian against finite differences of the gradient in d = 2
        let x = [0.7, -0.4];
        let (_, _, h) = p.eval(&x).unwrap();
        let eps = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += eps;
            xm[j] -= eps;
            let (_, gp, _) = p.eval(&xp).unwrap();
            let (_, gm, _) = p.eval(&xm).unwrap();
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                assert!((fd - h[i * 2 + j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn custom_failure_propagates() {
        let p = ConfinementPotential::custom(
            Arc::new(|_| Err("boom".into())),
            Arc::new(|_, _| Ok(())),
            Arc::new(|_, _| Ok(())),
        );
        assert!(matches!(p.eval(&[1.0]), Err(Error::Callable(_))));
    }
}
