use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{halton, unit_directions};

/// Logarithmic (`s = 0`) or Riesz (`s > 0`) interaction `g_s` together with
/// the matrix `M` turning its gradient into the pair force `K = M ∇g_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszKernel {
    dim: usize,
    exponent: f64,
    /// Row-major `dim × dim`.
    matrix: Vec<f64>,
}

/// Outcome of the sampled `M : ∇²g ≥ 0` check for sub-Coulombic kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianCheck {
    pub samples: usize,
    pub min_contraction: f64,
}

impl RieszKernel {
    pub fn new(dim: usize, exponent: f64, matrix: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("d", format!("dimension must be at least 2, got {dim}")));
        }
        if !(exponent >= 0.0 && exponent < dim as f64 - 1.0) {
            return Err(Error::invalid(
                "s",
                format!("exponent must lie in [0, {}), got {exponent}", dim - 1),
            ));
        }
        if matrix.len() != dim * dim || matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("M", format!("expected {} finite entries", dim * dim)));
        }
        let kernel = RieszKernel {
            dim,
            exponent,
            matrix,
        };
        if exponent >= dim as f64 - 2.0 {
            if !kernel.is_antisymmetric() {
                return Err(Error::invalid(
                    "M",
                    "Coulombic and super-Coulombic kernels need an anti-symmetric matrix",
                ));
            }
        } else {
            let check = kernel.sampled_hessian_check();
            if check.min_contraction < -1e-12 {
                return Err(Error::invalid(
                    "M",
                    format!(
                        "M : ∇²g is negative ({:e}) at a sampled point",
                        check.min_contraction
                    ),
                ));
            }
        }
        Ok(kernel)
    }

    /// Two-dimensional point vortices: `s = 0`, `M = strength · J` with `J` the
    /// rotation by +π/2.
    pub fn vortex(strength: f64) -> Self {
        RieszKernel {
            dim: 2,
            exponent: 0.0,
            matrix: vec![0.0, -strength, strength, 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn is_log(&self) -> bool {
        self.exponent == 0.0
    }

    /// `s = d - 2`: the potential is harmonic away from the origin.
    pub fn is_coulombic(&self) -> bool {
        self.exponent == self.dim as f64 - 2.0
    }

    pub fn is_antisymmetric(&self) -> bool {
        let d = self.dim;
        (0..d).all(|i| (0..d).all(|j| self.matrix[i * d + j] + self.matrix[j * d + i] == 0.0))
    }

    /// Frobenius norm of `M`.
    pub fn matrix_norm(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Radial profile `g_s(r)`.
    pub fn radial(&self, r: f64) -> f64 {
        if self.exponent == 0.0 {
            -r.ln()
        } else {
            r.powf(-self.exponent)
        }
    }

    /// Radial derivative `g_s'(r)`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        if self.exponent == 0.0 {
            -1.0 / r
        } else {
            -self.exponent * r.powf(-self.exponent - 1.0)
        }
    }

    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        let r = norm_checked(x)?;
        Ok(self.radial(r))
    }

    /// `M ∇g_s(x)` written into `out`.
    pub fn force_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let r = norm_checked(x)?;
        let scale = self.radial_derivative(r) / r;
        self.apply_matrix(x, scale, out);
        Ok(())
    }

    pub fn force(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.force_into(x, &mut out)?;
        Ok(out)
    }

    /// `out = scale · M x`.
    pub(crate) fn apply_matrix(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.matrix[i * d..(i + 1) * d];
            out[i] = scale * row.iter().zip(x).map(|(m, v)| m * v).sum::<f64>();
        }
    }

    /// `M : ∇²g_s(x)`.
    pub fn hessian_contraction(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let (a, b) = if self.exponent == 0.0 {
            // ∂ij(-ln r) = -(δij - 2 xi xj / r²) / r²
            (-1.0 / r2, 2.0 / (r2 * r2))
        } else {
            // ∂ij r^{-s} = -s r^{-s-2} (δij - (s+2) xi xj / r²)
            let s = self.exponent;
            let c = -s * r2.powf(-0.5 * s - 1.0);
            (c, -c * (s + 2.0) / r2)
        };
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let h = if i == j { a } else { 0.0 } + b * x[i] * x[j];
                acc += self.matrix[i * d + j] * h;
            }
        }
        acc
    }

    /// Evaluates `M : ∇²g` on 100 deterministic directions × 10 radii.
    pub fn sampled_hessian_check(&self) -> HessianCheck {
        let dirs = unit_directions(100, self.dim);
        let mut min = f64::INFINITY;
        let mut samples = 0;
        for k in 0..10 {
            // radii spread geometrically over [0.1, 10], jittered by a Halton offset
            let r = 0.1 * 100f64.powf((k as f64 + halton(k, 1)[0]) / 10.0);
            for e in &dirs {
                let x: Vec<f64> = e.iter().map(|v| v * r).collect();
                // scale-free comparison: homogeneous of degree -s-2
                let v = self.hessian_contraction(&x) * r.powf(self.exponent + 2.0);
                min = min.min(v);
                samples += 1;
            }
        }
        HessianCheck {
            samples,
            min_contraction: min,
        }
    }
}

fn norm_checked(x: &[f64]) -> Result<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        Err(Error::Singularity)
    } else {
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn identity(d: usize) -> Vec<f64> {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        m
    }

    // The symmetric identity matrix is only admissible in the sub-Coulombic
    // regime; these helpers bypass validation to test the raw formulas.
    fn raw(dim: usize, s: f64, m: Vec<f64>) -> RieszKernel {
        RieszKernel {
            dim,
            exponent: s,
            matrix: m,
        }
    }

    #[test]
    fn potential_examples() {
        let log2 = RieszKernel::vortex(1.0);
        assert_eq!(log2.potential(&[1.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(log2.potential(&[std::f64::consts::E, 0.0]).unwrap(), -1.0);
        let coulomb3 = RieszKernel::new(3, 1.0, vec![0.0; 9]).unwrap();
        assert_eq!(coulomb3.potential(&[0.0, 0.0, 2.0]).unwrap(), 0.5);
        assert!(matches!(log2.potential(&[0.0, 0.0]), Err(Error::Singularity)));
        assert!(matches!(log2.force(&[0.0, 0.0]), Err(Error::Singularity)));
    }

    #[test]
    fn force_examples() {
        let k = raw(2, 0.0, identity(2));
        let f = k.force(&[2.0, 0.0]).unwrap();
        assert_relative_eq!(f[0], -0.5);
        assert_eq!(f[1], 0.0);
        let k3 = raw(3, 1.0, identity(3));
        let f = k3.force(&[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(f[0], -1.0);
        assert_eq!(&f[1..], &[0.0, 0.0]);
    }

    #[test]
    fn antisymmetric_force_is_orthogonal() {
        let k = RieszKernel::vortex(1.7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let f = k.force(&x).unwrap();
            let dot = x[0] * f[0] + x[1] * f[1];
            let scale = (x[0].hypot(x[1])) * f[0].hypot(f[1]);
            assert!(dot.abs() <= 1e-14 * scale.max(1e-300));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (d, s) in [(2, 0.0), (2, 0.5), (3, 0.0), (3, 1.0), (3, 1.5)] {
            let k = raw(d, s, identity(d));
            let x: Vec<f64> = (0..d).map(|i| 0.3 + 0.41 * i as f64).collect();
            let f = k.force(&x).unwrap();
            let h = 1e-5;
            for i in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (k.potential(&xp).unwrap() - k.potential(&xm).unwrap()) / (2.0 * h);
                assert!((fd - f[i]).abs() <= 1e-6 * f[i].abs().max(1e-12), "d={d} s={s} i={i}");
            }
        }
    }

    #[test]
    fn construction_validates() {
        assert!(RieszKernel::new(2, 1.0, vec![0.0; 4]).is_err());
        assert!(RieszKernel::new(1, 0.0, vec![0.0]).is_err());
        // Coulombic in 2D with symmetric M is rejected
        assert!(RieszKernel::new(2, 0.0, identity(2)).is_err());
        assert!(RieszKernel::new(2, 0.0, vec![0.0, -1.0, 1.0, 0.0]).is_ok());
        // sub-Coulombic in 3D: M = -I satisfies M : ∇²g = -Δg ≥ 0, M = I does not
        let minus_i: Vec<f64> = identity(3).iter().map(|v| -v).collect();
        assert!(RieszKernel::new(3, 0.5, minus_i).is_ok());
        assert!(RieszKernel::new(3, 0.5, identity(3)).is_err());
    }
}
