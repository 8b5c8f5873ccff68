use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{ConfinementPotential, MollifiedKernel, RieszKernel};

pub type ExplicitFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// `b(x, y)` written into the buffer.
pub type PairFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum DriftVariant {
    /// `b(t, x)`, no interaction.
    Explicit(ExplicitFn),
    /// `b₀(x) + ∫ b(x, y) m(dy)`.
    McKean { b0: FieldFn, pair: PairFn },
    /// `K ⋆ m − ∇U`, with `K^ε` in place of `K` when a mollified table is given.
    LogRiesz {
        kernel: RieszKernel,
        mollified: Option<Arc<MollifiedKernel>>,
        confinement: ConfinementPotential,
    },
}

impl fmt::Debug for DriftVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftVariant::Explicit(_) => f.write_str("Explicit"),
            DriftVariant::McKean { .. } => f.write_str("McKean"),
            DriftVariant::LogRiesz {
                kernel,
                mollified,
                confinement,
            } => f
                .debug_struct("LogRiesz")
                .field("kernel", kernel)
                .field("eps", &mollified.as_ref().map(|m| m.eps()))
                .field("confinement", confinement.kind())
                .finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DriftSpec {
    pub variant: DriftVariant,
    pub sigma: f64,
}

impl DriftSpec {
    pub fn new(variant: DriftVariant, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and nonnegative, got {sigma}")));
        }
        Ok(DriftSpec { variant, sigma })
    }

    pub fn explicit(b: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static, sigma: f64) -> Result<Self> {
        Self::new(DriftVariant::Explicit(Arc::new(b)), sigma)
    }

    /// `b(x) = −κ x`.
    pub fn linear(kappa: f64, sigma: f64) -> Result<Self> {
        Self::explicit(
            move |_, x, out| {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = -kappa * v;
                }
            },
            sigma,
        )
    }

    pub fn zero(sigma: f64) -> Result<Self> {
        Self::explicit(|_, _, out| out.iter_mut().for_each(|o| *o = 0.0), sigma)
    }

    pub fn mckean(
        b0: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        pair: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        sigma: f64,
    ) -> Result<Self> {
        Self::new(
            DriftVariant::McKean {
                b0: Arc::new(b0),
                pair: Arc::new(pair),
            },
            sigma,
        )
    }

    pub fn log_riesz(
        kernel: RieszKernel,
        mollified: Option<Arc<MollifiedKernel>>,
        confinement: ConfinementPotential,
        sigma: f64,
    ) -> Result<Self> {
        if let Some(m) = &mollified {
            if m.kernel() != &kernel {
                return Err(Error::invalid("mollifier", "table was built for a different kernel"));
            }
        }
        Self::new(
            DriftVariant::LogRiesz {
                kernel,
                mollified,
                confinement,
            },
            sigma,
        )
    }

    /// Same drift with another diffusion coefficient.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.variant.clone(), sigma)
    }

    pub fn is_interacting(&self) -> bool {
        !matches!(self.variant, DriftVariant::Explicit(_))
    }

    /// Mollification radius of a log-Riesz drift (0 for the raw kernel).
    pub fn mollification_eps(&self) -> f64 {
        match &self.variant {
            DriftVariant::LogRiesz {
                mollified: Some(m), ..
            } => m.eps(),
            _ => 0.0,
        }
    }

    pub fn uses_raw_kernel(&self) -> bool {
        matches!(self.variant, DriftVariant::LogRiesz { mollified: None, .. })
    }

    /// Interaction frozen against the weighted point measure `Σ wⱼ δ_{yⱼ}`,
    /// giving an explicit drift.
    pub fn frozen(&self, points: &[Vec<f64>], weights: &[f64]) -> Result<DriftSpec> {
        if points.len() != weights.len() {
            return Err(Error::Shape("points and weights differ in length".into()));
        }
        let pts: Vec<(Vec<f64>, f64)> = points.iter().cloned().zip(weights.iter().copied()).collect();
        match &self.variant {
            DriftVariant::Explicit(_) => Ok(self.clone()),
            DriftVariant::McKean { b0, pair } => {
                let (b0, pair) = (b0.clone(), pair.clone());
                DriftSpec::explicit(
                    move |_, x, out| {
                        b0(x, out);
                        let mut tmp = vec![0.0; x.len()];
                        for (y, w) in &pts {
                            pair(x, y, &mut tmp);
                            for (o, v) in out.iter_mut().zip(&tmp) {
                                *o += w * v;
                            }
                        }
                    },
                    self.sigma,
                )
            }
            DriftVariant::LogRiesz { .. } => {
                Err(Error::invalid("drift", "log-Riesz drifts cannot be frozen against point masses"))
            }
        }
    }

    /// Drift of an explicit variant.
    pub fn eval_free(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.variant {
            DriftVariant::Explicit(b) => {
                b(t, x, out);
                Ok(())
            }
            _ => Err(Error::invalid("drift", "interacting drift needs a measure argument")),
        }
    }

    /// Drift felt by particle `i` of the row-major configuration `positions`;
    /// interactions carry the weight `1/(N−1)` over `j ≠ i`.
    pub fn particle_drift(
        &self,
        t: f64,
        i: usize,
        positions: &[f64],
        d: usize,
        out: &mut [f64],
    ) -> Result<()> {
        let n = positions.len() / d;
        let xi = &positions[i * d..(i + 1) * d];
        let weight = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };
        let mut tmp = [0.0f64; 8];
        let mut tmp_vec;
        let tmp: &mut [f64] = if d <= 8 {
            &mut tmp[..d]
        } else {
            tmp_vec = vec![0.0; d];
            &mut tmp_vec
        };
        let mut diff = [0.0f64; 8];
        let mut diff_vec;
        let diff: &mut [f64] = if d <= 8 {
            &mut diff[..d]
        } else {
            diff_vec = vec![0.0; d];
            &mut diff_vec
        };
        match &self.variant {
            DriftVariant::Explicit(b) => {
                b(t, xi, out);
            }
            DriftVariant::McKean { b0, pair } => {
                b0(xi, out);
                for j in (0..n).filter(|&j| j != i) {
                    pair(xi, &positions[j * d..(j + 1) * d], tmp);
                    for (o, v) in out.iter_mut().zip(tmp.iter()) {
                        *o += weight * v;
                    }
                }
            }
            DriftVariant::LogRiesz {
                kernel,
                mollified,
                confinement,
            } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for j in (0..n).filter(|&j| j != i) {
                    let xj = &positions[j * d..(j + 1) * d];
                    for k in 0..d {
                        diff[k] = xi[k] - xj[k];
                    }
                    match mollified {
                        Some(m) => {
                            m.eval(diff, tmp);
                        }
                        None => kernel.force_into(diff, tmp)?,
                    }
                    for (o, v) in out.iter_mut().zip(tmp.iter()) {
                        *o += v;
                    }
                }
                confinement.gradient_into(xi, tmp)?;
                for (o, v) in out.iter_mut().zip(tmp.iter()) {
                    *o = weight * *o - v;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vortices_feel_orthogonal_forces() {
        let drift = DriftSpec::log_riesz(
            RieszKernel::vortex(1.0),
            None,
            ConfinementPotential::quadratic(0.0),
            0.0,
        )
        .unwrap();
        let pos = [1.0, 0.0, -1.0, 0.0];
        let mut out = [0.0; 2];
        drift.particle_drift(0.0, 0, &pos, 2, &mut out).unwrap();
        // K(x) = J(−x/|x|²) at x = (2, 0): (0, −1/2)
        assert_eq!(out, [0.0, -0.5]);
        let coincident = [0.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            drift.particle_drift(0.0, 0, &coincident, 2, &mut out),
            Err(Error::Singularity)
        ));
    }

    #[test]
    fn mckean_uses_mean_over_others() {
        let drift = DriftSpec::mckean(
            |x, out| out[0] = -x[0],
            |x, y, out| out[0] = y[0] - x[0],
            1.0,
        )
        .unwrap();
        let pos = [0.0, 1.0, 3.0];
        let mut out = [0.0];
        drift.particle_drift(0.0, 0, &pos, 1, &mut out).unwrap();
        assert_eq!(out[0], 2.0);
        let frozen = drift.frozen(&[vec![1.0], vec![3.0]], &[0.5, 0.5]).unwrap();
        frozen.eval_free(0.0, &[0.0], &mut out).unwrap();
        assert_eq!(out[0], 2.0);
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(DriftSpec::zero(f64::NAN).is_err());
        assert!(DriftSpec::zero(-1.0).is_err());
    }
}
