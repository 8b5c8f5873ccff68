//! wasm-bindgen exports for the static demo page in `www/`.

use meanfield::diagnostics::{bakry_emery_constant, relative_entropy};
use meanfield::grid::GridDensity;
use meanfield::kernels::{ConfinementPotential, DriftSpec, RieszKernel};
use meanfield::sde::{run_particles, ParticleEnsemble, SdeConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: meanfield::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Two point vortices in quadratic confinement, integrated with RK4.
/// Returns `[x₁, y₁, x₂, y₂]` at `samples + 1` evenly spaced times.
#[wasm_bindgen]
pub fn two_vortex_orbit(kappa: f64, strength: f64, t_end: f64, dt: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    let drift = DriftSpec::log_riesz(RieszKernel::vortex(strength), None, ConfinementPotential::quadratic(kappa), 0.0)
        .map_err(js_err)?;
    let mut e = ParticleEnsemble::new(vec![0.6, 0.1, -0.3, -0.2], 2, 0).map_err(js_err)?;
    let steps = (t_end / dt).round().max(1.0) as usize;
    let every = (steps / samples.max(1)).max(1);
    let mut out = e.positions().to_vec();
    let mut k = 0;
    run_particles(&mut e, &drift, &SdeConfig::rk4(dt), t_end, |e, _| {
        k += 1;
        if k % every == 0 || k == steps {
            out.extend_from_slice(e.positions());
        }
        Ok(())
    })
    .map_err(js_err)?;
    Ok(out)
}

/// `[grid, exact]` relative entropy of `N(shift, variance)` with respect to
/// `N(0, 1)` on a 1-D grid over `[−10, 10]`.
#[wasm_bindgen]
pub fn gaussian_kl(shift: f64, variance: f64, cells: usize) -> Result<Vec<f64>, JsError> {
    let nu = GridDensity::gaussian(1, cells, 10.0, &[shift], variance).map_err(js_err)?;
    let mu = GridDensity::gaussian(1, cells, 10.0, &[0.0], 1.0).map_err(js_err)?;
    let grid = relative_entropy(&nu, &mu).map_err(js_err)?;
    let exact = 0.5 * (variance - 1.0 - variance.ln() + shift * shift);
    Ok(vec![grid, exact])
}

/// Log-Sobolev constant along the OU flow `dX = −κX dt + √2σ dW` from
/// `N(0, v₀)`: `samples + 1` triples `[t, bound, half the exact variance]`.
#[wasm_bindgen]
pub fn bakry_emery_curve(kappa: f64, v0: f64, sigma: f64, t_end: f64, samples: usize) -> Vec<f64> {
    let samples = samples.max(1);
    let mut out = Vec::with_capacity(3 * (samples + 1));
    for k in 0..=samples {
        let t = t_end * k as f64 / samples as f64;
        let decay = (-2.0 * kappa * t).exp();
        let variance = decay * v0 + sigma * sigma * (1.0 - decay) / kappa;
        out.extend([t, bakry_emery_constant(-kappa, v0 / 2.0, sigma, t), variance / 2.0]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_radius_contracts_like_exp() {
        let path = two_vortex_orbit(1.0, 1.0, 1.0, 1e-3, 10).unwrap();
        let r = |p: &[f64]| (p[0] - p[2]).hypot(p[1] - p[3]);
        let last = &path[path.len() - 4..];
        assert!((r(last) / r(&path[..4]) - (-1.0f64).exp()).abs() < 1e-9);
        assert_eq!(path.len(), 4 * 11);
    }

    #[test]
    fn kl_matches_closed_form() {
        let v = gaussian_kl(0.7, 1.8, 1024).unwrap();
        assert!((v[0] - v[1]).abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn bound_equals_half_variance() {
        let c = bakry_emery_curve(1.0, 3.0, 0.8, 2.0, 8);
        for row in c.chunks(3) {
            assert!((row[1] - row[2]).abs() < 1e-12);
        }
    }
}
