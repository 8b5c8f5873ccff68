use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{high_temp_threshold, kde_on_grid, poincare_scan, TestFunctionFamily};
use crate::error::{Error, Result};
use crate::experiments::params::{probe_grid, Overrides};
use crate::experiments::report::{Comparison, ExperimentReport};
use crate::grid::GridDensity;
use crate::kernels::{convexity_profile, outer_dissipativity, DriftSpec, ProfileSampling};
use crate::sde::{contraction_fit_log, ensemble_monitors, ParticleEnsemble, SynchronousGap};

/// `b(x) = −x³ + x`, the gradient flow of `x⁴/4 − x²/2`.
pub fn double_well_drift(sigma: f64) -> Result<DriftSpec> {
    DriftSpec::explicit(|_, x, out| out[0] = -x[0] * x[0] * x[0] + x[0], sigma)
}

/// Constants entering the temperature condition, fitted from sampled drift
/// convexity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureFit {
    pub rho: f64,
    pub lipschitz: f64,
    pub radius: f64,
    pub r_star: f64,
    pub k: f64,
    pub sigma2: f64,
}

const RHO_GRID: [f64; 12] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0];

/// Smallest `R` (to 1e−6 relative) with sampled outer dissipativity `≤ −ρ`.
fn dissipative_radius(drift: &DriftSpec, rho: f64, sampling: &ProfileSampling) -> Result<f64> {
    let ok = |r: f64| -> Result<bool> { Ok(outer_dissipativity(drift, 1, 0.0, r, sampling)? <= -rho) };
    let mut hi = 1.0;
    while !ok(hi)? {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::invalid("rho", format!("no dissipative radius for rho = {rho}")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `sup{−x·b(x) : |x| ≤ R}` on a uniform sample.
fn inner_bound(drift: &DriftSpec, radius: f64) -> Result<f64> {
    let mut out = [0.0];
    let mut best: f64 = 0.0;
    for i in 0..=4000 {
        let x = -radius + 2.0 * radius * i as f64 / 4000.0;
        drift.eval_free(0.0, &[x], &mut out)?;
        best = best.max(-x * out[0]);
    }
    Ok(best)
}

/// Minimises the threshold `σ₀²` over a grid of dissipativity rates.
pub fn fit_temperature(drift: &DriftSpec) -> Result<(TemperatureFit, Vec<TemperatureFit>)> {
    let sampling = ProfileSampling::default();
    let radii = [1e-3, 0.01, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
    let lipschitz = convexity_profile(drift, 1, 0.0, &radii, &sampling)?
        .iter()
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let mut fits = Vec::new();
    for rho in RHO_GRID {
        let radius = dissipative_radius(drift, rho, &sampling)?;
        let r_star = radius * (2.0 + 2.0 * lipschitz / rho);
        let k = inner_bound(drift, r_star)?;
        let (r_star, sigma2) = high_temp_threshold(rho, lipschitz, radius, k, 1)?;
        fits.push(TemperatureFit {
            rho,
            lipschitz,
            radius,
            r_star,
            k,
            sigma2,
        });
    }
    let best = *fits.iter().min_by(|a, b| a.sigma2.total_cmp(&b.sigma2)).expect("nonempty grid");
    Ok((best, fits))
}

/// Double well at the fitted threshold temperature: synchronous-coupling
/// contraction, Gaussian pair moment and a Poincaré scan along the flow.
pub fn high_temperature_contraction(o: &Overrides) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (fit, fits) = fit_temperature(&double_well_drift(1.0)?)?;
    let sigma = o.sigma.unwrap_or(fit.sigma2.sqrt());
    let drift = double_well_drift(sigma)?;
    let pairs = o.particles_or(10_000);
    let dt = o.dt_or(5e-4);
    let t_end = o.t_end_or(5.0);
    let seed = o.seed_or(7);
    let delta = fit.rho / (5.0 * sigma * sigma);
    let k_moment = 2.0;

    let first = ParticleEnsemble::gaussian(pairs, &[0.0], 1.0, seed)?;
    let second = ParticleEnsemble::gaussian(pairs, &[1.0], 1.0, seed.wrapping_add(1))?;
    let mut gap = SynchronousGap::new(first, &second, 1e-6)?;
    let probes = probe_grid(0.0, t_end, 0.1);
    let kde_grid = GridDensity::from_fn(1, 512, 20.0 * sigma.sqrt(), |_| 1.0)?;
    let family = TestFunctionFamily::Hermite { k_max: 4 };

    let mut log_gap = Vec::new();
    let mut log_moment = Vec::new();
    let mut v_moment = Vec::new();
    let mut poincare = Vec::new();
    let steps_per_probe = (0.1 / dt).round() as usize;
    for (i, &t) in probes.iter().enumerate() {
        if i > 0 {
            for _ in 0..steps_per_probe {
                gap.step(&drift, dt)?;
            }
        }
        log_gap.push((t, gap.log_mean_square_gap()));
        let mon = ensemble_monitors(&gap.ensemble, delta, k_moment)?;
        log_moment.push(mon.log_exp_pair_moment);
        v_moment.push(mon.k_moment);
        let kde = kde_on_grid(gap.ensemble.positions(), 1, &kde_grid)?;
        poincare.push(poincare_scan(&kde, &family)?.value);
    }
    let contraction = contraction_fit_log(&log_gap)?;
    let times: Vec<f64> = probes.clone();
    let split = times.iter().position(|t| *t > 0.5 + 1e-9).unwrap_or(times.len());
    let early_max = log_moment[..split].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let late_max = log_moment[split..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let moment_ratio = (late_max - early_max).exp();
    let late_p = &poincare[split..];
    let p_spread = late_p.iter().cloned().fold(0.0, f64::max) / late_p.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut r = ExperimentReport::new("high_temperature_contraction", seed);
    r.param("pairs", pairs)
        .param("dt", dt)
        .param("t_end", t_end)
        .param("sigma", sigma)
        .param("delta", delta)
        .param("k", k_moment)
        .param("rho_grid", RHO_GRID)
        .param("gap_switch", 1e-6);
    r.scalar("rho", fit.rho)
        .scalar("lipschitz", fit.lipschitz)
        .scalar("radius", fit.radius)
        .scalar("r_star", fit.r_star)
        .scalar("inner_bound", fit.k)
        .scalar("sigma0_squared", fit.sigma2)
        .scalar("contraction_prefactor", contraction.m)
        .series("threshold_by_rho", fits.iter().map(|f| f.rho).collect(), fits.iter().map(|f| f.sigma2).collect(), false, None)
        .series("log_mean_square_gap", times.clone(), log_gap.iter().map(|p| p.1).collect(), false, None)
        .series("log_exp_pair_moment", times.clone(), log_moment, false, None)
        .series("k_moment", times.clone(), v_moment, false, None)
        .series("poincare_scan", times, poincare, false, None);
    r.verdict("contraction_rate_positive", "lambda", contraction.lambda, Comparison::Above, 0.0);
    r.verdict("contraction_fit_quality", "r_squared", contraction.r_squared, Comparison::AtLeast, 0.95);
    r.verdict("pair_moment_bounded", "pair_moment_ratio", moment_ratio, Comparison::AtMost, 1.1);
    r.verdict("poincare_stable", "poincare_spread", p_spread, Comparison::AtMost, 1.1);
    r.provenance.dt = Some(dt);
    r.provenance.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_constants_match_the_analytic_profile() {
        let (best, fits) = fit_temperature(&double_well_drift(1.0).unwrap()).unwrap();
        assert!((best.lipschitz - 1.0).abs() < 1e-4);
        // the worst pair on |x| ≥ R is (x, −x/2): 1 − 3R²/4 = −ρ
        for f in &fits {
            let exact = ((f.rho + 1.0) / 0.75).sqrt();
            assert!((f.radius - exact).abs() < 1e-4 * exact, "{f:?}");
            let rs = f.r_star;
            assert!((f.k - (rs.powi(4) - rs * rs)).abs() < 1e-3 * f.k);
        }
        assert!(fits.iter().all(|f| f.sigma2 >= best.sigma2));
    }

    #[test]
    fn small_contraction_run() {
        let o = Overrides {
            particles: Some(500),
            t_end: Some(1.0),
            ..Overrides::default()
        };
        let r = high_temperature_contraction(&o).unwrap();
        assert!(r.get("lambda").unwrap() > 0.0);
    }
}
