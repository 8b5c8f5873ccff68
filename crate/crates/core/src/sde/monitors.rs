use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::RieszKernel;
use crate::numerics::parallel;
use crate::sde::ensemble::ParticleEnsemble;

/// `E(x) = ½ Σ_{i≠j} g_s(xⁱ − xʲ) + (N 𝟙_{s=0}/2) Σ_i |xⁱ|²`.
pub fn energy_functional(ensemble: &ParticleEnsemble, kernel: &RieszKernel) -> Result<f64> {
    if ensemble.dim() != kernel.dim() {
        return Err(Error::Shape("ensemble and kernel dimensions differ".into()));
    }
    Ok(pair_energy(ensemble, kernel)? + confinement_energy(ensemble, kernel))
}

/// `½ Σ_{i≠j} g_s(xⁱ − xʲ)`.
pub fn pair_energy(ensemble: &ParticleEnsemble, kernel: &RieszKernel) -> Result<f64> {
    let n = ensemble.len();
    let d = ensemble.dim();
    let x = ensemble.positions();
    let rows = parallel::map(n, |i| -> Result<f64> {
        let mut acc = 0.0;
        let mut diff = vec![0.0; d];
        for j in i + 1..n {
            for k in 0..d {
                diff[k] = x[i * d + k] - x[j * d + k];
            }
            acc += kernel.potential(&diff)?;
        }
        Ok(acc)
    });
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    Ok(total)
}

fn confinement_energy(ensemble: &ParticleEnsemble, kernel: &RieszKernel) -> f64 {
    if !kernel.is_log() {
        return 0.0;
    }
    let sq: f64 = ensemble.positions().iter().map(|v| v * v).sum();
    0.5 * ensemble.len() as f64 * sq
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleMonitors {
    pub min_distance: f64,
    /// `(1/N) Σ |Xⁱ|^k`.
    pub k_moment: f64,
    /// Mean of `e^{δ|Xⁱ − Xʲ|²}` over ⌊N/2⌋ disjoint pairs; `+∞` on overflow.
    pub exp_pair_moment: f64,
    /// Logarithm of the same mean, computed without overflow.
    pub log_exp_pair_moment: f64,
    pub exp_pair_stderr: f64,
    pub overflow: bool,
    pub pairs: usize,
}

/// Appendix-style runtime monitors: stopping-time distance, Lyapunov moment
/// and the Gaussian pair moment. Pairs are `(i, i + ⌊N/2⌋)`.
pub fn ensemble_monitors(ensemble: &ParticleEnsemble, delta: f64, k: f64) -> Result<EnsembleMonitors> {
    if !(delta >= 0.0) || !(k >= 0.0) {
        return Err(Error::invalid("delta", "delta and k must be nonnegative"));
    }
    let n = ensemble.len();
    let d = ensemble.dim();
    let k_moment = (0..n)
        .map(|i| {
            let r2: f64 = ensemble.particle(i).iter().map(|v| v * v).sum();
            if k == 0.0 { 1.0 } else { r2.powf(0.5 * k) }
        })
        .sum::<f64>()
        / n as f64;
    let half = n / 2;
    let exps: Vec<f64> = (0..half)
        .map(|i| {
            let (a, b) = (ensemble.particle(i), ensemble.particle(i + half));
            delta * (0..d).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>()
        })
        .collect();
    let (mean, log_mean, stderr, overflow) = if exps.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN, false)
    } else {
        let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = exps.iter().map(|e| (e - top).exp()).collect();
        let m = scaled.iter().sum::<f64>() / half as f64;
        let log_mean = top + m.ln();
        let var = if half > 1 {
            scaled.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (half - 1) as f64
        } else {
            0.0
        };
        let stderr_scaled = (var / half as f64).sqrt();
        let mean = log_mean.exp();
        if mean.is_finite() {
            (mean, log_mean, stderr_scaled * top.exp(), false)
        } else {
            (f64::INFINITY, log_mean, f64::INFINITY, true)
        }
    };
    Ok(EnsembleMonitors {
        min_distance: ensemble.min_distance(),
        k_moment,
        exp_pair_moment: mean,
        log_exp_pair_moment: log_mean,
        exp_pair_stderr: stderr,
        overflow,
        pairs: half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_example() {
        let e = ParticleEnsemble::new(vec![0.5, 0.0, -0.5, 0.0], 2, 0).unwrap();
        let v = energy_functional(&e, &RieszKernel::vortex(1.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let c = ParticleEnsemble::new(vec![0.0, 0.0, 0.0, 0.0], 2, 0).unwrap();
        assert!(energy_functional(&c, &RieszKernel::vortex(1.0)).is_err());
    }

    #[test]
    fn energy_decays_and_blows_up() {
        let k = RieszKernel::new(3, 0.5, vec![0.0; 9]).unwrap();
        let far = |s: f64| {
            ParticleEnsemble::new(vec![0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, s, 0.0], 3, 0).unwrap()
        };
        assert!(energy_functional(&far(1e8), &k).unwrap() < 1e-3);
        let mut prev = f64::NEG_INFINITY;
        for r in [1.0, 0.1, 0.01, 0.001] {
            let e = ParticleEnsemble::new(vec![0.0, 0.0, 0.0, r, 0.0, 0.0, 5.0, 5.0, 0.0], 3, 0).unwrap();
            let v = energy_functional(&e, &k).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn monitors_at_origin() {
        let e = ParticleEnsemble::new(vec![0.0; 6], 2, 0).unwrap();
        let m = ensemble_monitors(&e, 0.1, 2.0).unwrap();
        assert_eq!(m.min_distance, 0.0);
        assert_eq!(m.k_moment, 0.0);
        assert_eq!(m.exp_pair_moment, 1.0);
    }

    #[test]
    fn gaussian_pair_moment() {
        let e = ParticleEnsemble::gaussian(200_000, &[0.0], 1.0, 5).unwrap();
        let m = ensemble_monitors(&e, 0.1, 2.0).unwrap();
        let exact = (1.0f64 - 0.4).powf(-0.5);
        assert!((m.exp_pair_moment - exact).abs() < 3.0 * m.exp_pair_stderr);
        let e3 = ParticleEnsemble::gaussian(100_000, &[0.0, 0.0, 0.0], 1.0, 6).unwrap();
        let m3 = ensemble_monitors(&e3, 0.0, 2.0).unwrap();
        assert!((m3.k_moment - 3.0).abs() < 0.05);
    }

    #[test]
    fn overflow_is_flagged() {
        let e = ParticleEnsemble::new(vec![0.0, 100.0], 1, 0).unwrap();
        let m = ensemble_monitors(&e, 1.0, 1.0).unwrap();
        assert!(m.overflow && m.exp_pair_moment.is_infinite());
        assert!((m.log_exp_pair_moment - 1e4).abs() < 1e-9);
    }
}
