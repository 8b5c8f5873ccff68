use crate::error::{Error, Result};

/// `C_t = e^{2Lt} C₀ + σ² ∫₀ᵗ e^{2Ls} ds` (convention `H ≤ C·I`).
pub fn bakry_emery_constant(lipschitz: f64, c0: f64, sigma: f64, t: f64) -> f64 {
    let s2 = sigma * sigma;
    if lipschitz == 0.0 {
        return c0 + s2 * t;
    }
    let a = 2.0 * lipschitz * t;
    a.exp() * c0 + s2 * a.exp_m1() / (2.0 * lipschitz)
}

/// `R_* = R(2 + 2L/ρ)^{1/d}` and
/// `σ₀² = 2(2L + ρ)((L + ρ/4)R_*² + K)/(ρd)`.
pub fn high_temp_threshold(rho: f64, lipschitz: f64, radius: f64, k: f64, dim: usize) -> Result<(f64, f64)> {
    if !(rho > 0.0) {
        return Err(Error::invalid("rho", format!("must be positive, got {rho}")));
    }
    if lipschitz < 0.0 || radius < 0.0 || k < 0.0 || dim == 0 {
        return Err(Error::invalid("L, R, K, d", "must be nonnegative with d ≥ 1"));
    }
    let r_star = radius * (2.0 + 2.0 * lipschitz / rho).powf(1.0 / dim as f64);
    let d = dim as f64;
    let s2 = 2.0 * (2.0 * lipschitz + rho) * ((lipschitz + rho / 4.0) * r_star * r_star + k) / (rho * d);
    Ok((r_star, s2))
}

/// `γ = ‖∇ₓW‖∞²/2` and whether `σ⁴ > 8γη`.
pub fn llf_condition(grad_w_sup: f64, eta: f64, sigma: f64) -> (f64, bool) {
    let gamma = grad_w_sup * grad_w_sup / 2.0;
    (gamma, sigma.powi(4) > 8.0 * gamma * eta)
}

/// Optimal `H ≤ C·I` constant of `N(0, v)`.
pub fn gaussian_lsi_constant(variance: f64) -> f64 {
    variance / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bakry_emery_examples() {
        assert_eq!(bakry_emery_constant(0.0, 2.0, 1.0, 1.0), 3.0);
        assert_eq!(bakry_emery_constant(0.7, 1.3, 2.0, 0.0), 1.3);
        for v0 in [0.2, 1.0, 3.0] {
            for t in [0.0f64, 0.3, 2.0] {
                let exact = gaussian_lsi_constant(1.0 + (v0 - 1.0) * (-2.0 * t).exp());
                assert!((bakry_emery_constant(-1.0, v0 / 2.0, 1.0, t) - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(high_temp_threshold(1.0, 1.0, 0.0, 0.0, 2).unwrap().1, 0.0);
        let (r, s2) = high_temp_threshold(1.0, 1.0, 1.0, 1.0, 2).unwrap();
        assert!((r - 2.0).abs() < 1e-15);
        assert!((s2 - 18.0).abs() < 1e-12);
        assert!(high_temp_threshold(0.0, 1.0, 1.0, 1.0, 1).is_err());
        let mut prev = 0.0;
        for k in [0.0, 0.5, 1.0, 4.0] {
            let mut prev_r = 0.0;
            for radius in [0.0, 0.5, 1.0, 3.0] {
                let s2 = high_temp_threshold(0.8, 1.5, radius, k, 3).unwrap().1;
                assert!(s2 >= prev_r);
                prev_r = s2;
            }
            let s2 = high_temp_threshold(0.8, 1.5, 1.0, k, 3).unwrap().1;
            assert!(s2 >= prev);
            prev = s2;
        }
    }

    #[test]
    fn llf_examples() {
        assert_eq!(llf_condition(2f64.sqrt(), 1.0, 2.0).1, true);
        assert!((llf_condition(2f64.sqrt(), 1.0, 2.0).0 - 1.0).abs() < 1e-15);
        assert!(!llf_condition(1.0, 1.0, 0.0).1);
        // σ⁴ = 8γη exactly: γ = 2, η = 1, σ = 2
        assert!(!llf_condition(2.0, 1.0, 2.0).1);
    }
}
