use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DriftSpec;
use crate::numerics::{halton, unit_directions};

/// Deterministic pair sampling for drift convexity estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSampling {
    /// Midpoints per radius: the box centre followed by Halton points.
    pub base_points: usize,
    pub half_width: f64,
    /// Pair directions (ignored in d = 1).
    pub directions: usize,
}

impl Default for ProfileSampling {
    fn default() -> Self {
        ProfileSampling {
            base_points: 64,
            half_width: 4.0,
            directions: 16,
        }
    }
}

impl ProfileSampling {
    fn bases(&self, d: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; d]];
        for i in 1..self.base_points.max(1) as u64 {
            let h = halton(i, d);
            out.push(h.iter().map(|u| (2.0 * u - 1.0) * self.half_width).collect());
        }
        out
    }

    fn dirs(&self, d: usize) -> Vec<Vec<f64>> {
        if d == 1 {
            vec![vec![1.0]]
        } else {
            unit_directions(self.directions.max(1), d)
        }
    }
}

fn ratio(drift: &DriftSpec, t: f64, x: &[f64], y: &[f64], bx: &mut [f64], by: &mut [f64]) -> Result<f64> {
    drift.eval_free(t, x, bx)?;
    drift.eval_free(t, y, by)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..x.len() {
        let dx = x[k] - y[k];
        num += (bx[k] - by[k]) * dx;
        den += dx * dx;
    }
    Ok(num / den)
}

/// `κ(r)`: empirical maximum of `(b(x) − b(y))·(x − y)/|x − y|²` over sampled
/// pairs with `|x − y| = r`.
pub fn convexity_profile(
    drift: &DriftSpec,
    dim: usize,
    t: f64,
    radii: &[f64],
    sampling: &ProfileSampling,
) -> Result<Vec<(f64, f64)>> {
    if radii.is_empty() {
        return Err(Error::invalid("radii", "empty radius list"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("radii", format!("radius {r} is not positive")));
    }
    let bases = sampling.bases(dim);
    let dirs = sampling.dirs(dim);
    let mut bx = vec![0.0; dim];
    let mut by = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    radii
        .iter()
        .map(|&r| {
            let mut best = f64::NEG_INFINITY;
            for c in &bases {
                for e in &dirs {
                    for k in 0..dim {
                        x[k] = c[k] - 0.5 * r * e[k];
                        y[k] = c[k] + 0.5 * r * e[k];
                    }
                    best = best.max(ratio(drift, t, &x, &y, &mut bx, &mut by)?);
                }
            }
            Ok((r, best))
        })
        .collect()
}

/// Empirical sup of the convexity ratio over pairs with `|x| ≥ radius`:
/// a negative value `−ρ` certifies (on the sample) the outer dissipativity
/// condition at rate `ρ`.
pub fn outer_dissipativity(
    drift: &DriftSpec,
    dim: usize,
    t: f64,
    radius: f64,
    sampling: &ProfileSampling,
) -> Result<f64> {
    let dirs = sampling.dirs(dim);
    let bases = sampling.bases(dim);
    let mut bx = vec![0.0; dim];
    let mut by = vec![0.0; dim];
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut best = f64::NEG_INFINITY;
    for e in &dirs {
        for step in 0..=40 {
            let len = radius * (1.0 + 0.05 * step as f64);
            for k in 0..dim {
                x[k] = len * e[k];
            }
            // partners along the ray through x (λ·x) and in the sampling box
            for l in 0..=160 {
                let lambda = -2.0 + 0.025 * l as f64;
                if lambda == 1.0 {
                    continue;
                }
                for k in 0..dim {
                    y[k] = lambda * x[k];
                }
                best = best.max(ratio(drift, t, &x, &y, &mut bx, &mut by)?);
            }
            for c in &bases {
                if c.iter().zip(&x).all(|(a, b)| a == b) {
                    continue;
                }
                best = best.max(ratio(drift, t, &x, c, &mut bx, &mut by)?);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_well() -> DriftSpec {
        DriftSpec::explicit(|_, x, out| out[0] = -x[0] * x[0] * x[0] + x[0], 1.0).unwrap()
    }

    #[test]
    fn linear_drift_has_constant_profile() {
        let drift = DriftSpec::linear(1.0, 1.0).unwrap();
        for d in [1, 2, 3] {
            let prof = convexity_profile(&drift, d, 0.0, &[0.1, 1.0, 5.0], &ProfileSampling::default()).unwrap();
            for (_, k) in prof {
                assert!((k + 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn double_well_profile_matches_quartic_algebra() {
        // (b(x) − b(y))/(x − y) = 1 − (x² + xy + y²), maximised at midpoint 0
        let radii: Vec<f64> = (1..=40).map(|k| 0.1 * k as f64).collect();
        let prof = convexity_profile(&double_well(), 1, 0.0, &radii, &ProfileSampling::default()).unwrap();
        for (r, k) in prof {
            assert!((k - (1.0 - r * r / 4.0)).abs() < 1e-12, "r={r} k={k}");
        }
        // |x| ≥ R: sup over y of 1 − (x² + xy + y²) is 1 − 3R²/4
        let outer = outer_dissipativity(&double_well(), 1, 0.0, 2.0, &ProfileSampling::default()).unwrap();
        assert!((outer + 2.0).abs() < 1e-12);
    }

    #[test]
    fn bounded_perturbation_obeys_triangle_bound() {
        let delta = 0.3;
        let drift = DriftSpec::explicit(
            move |_, x, out| {
                // perturbation of Euclidean norm exactly δ
                if x.len() == 1 {
                    out[0] = -x[0] + delta * (3.0 * x[0]).sin().signum();
                } else {
                    let phase = 3.0 * x[0] + 2.0 * x[1];
                    out[0] = -x[0] + delta * phase.cos();
                    out[1] = -x[1] + delta * phase.sin();
                }
            },
            1.0,
        )
        .unwrap();
        let radii = [0.5, 1.0, 2.0, 4.0];
        for d in [1, 2] {
            let prof = convexity_profile(&drift, d, 0.0, &radii, &ProfileSampling::default()).unwrap();
            for (r, k) in prof {
                assert!(k <= -1.0 + 2.0 * delta / r + 1e-12);
            }
        }
    }

    #[test]
    fn empty_radii_rejected() {
        assert!(convexity_profile(&double_well(), 1, 0.0, &[], &ProfileSampling::default()).is_err());
    }
}
