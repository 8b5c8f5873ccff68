use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::parallel;
use crate::sde::rng::{self, Lane};

/// Survival probabilities `P[r_v > 0]` on the grid `v = k·dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
}

/// Simulates `dr = −r κ(r) dt + 2√2 dW` absorbed at 0. A Brownian-bridge
/// test catches crossings between grid points.
pub fn dominating_radius(
    kappa: impl Fn(f64) -> f64 + Sync + Send,
    r0: f64,
    dt: f64,
    horizon: f64,
    paths: usize,
    seed: u64,
) -> Result<SurvivalCurve> {
    if !(dt > 0.0) || !(horizon >= 0.0) || paths == 0 || !(r0 >= 0.0) {
        return Err(Error::invalid("dominating_radius", "need dt > 0, T ≥ 0, r0 ≥ 0, paths > 0"));
    }
    let steps = (horizon / dt).round() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    if r0 == 0.0 {
        return Ok(SurvivalCurve {
            survival: vec![0.0; times.len()],
            times,
        });
    }
    let diffusion = 2.0 * 2f64.sqrt();
    let var = diffusion * diffusion * dt;
    // absorption step index per path (steps + 1 = survived)
    let death = parallel::map(paths, |p| {
        let mut g = rng::stream(seed, Lane::Aux, p as u64, 0);
        let mut r = r0;
        for k in 0..steps {
            let z: f64 = g.sample(StandardNormal);
            let next = r - r * kappa(r) * dt + diffusion * dt.sqrt() * z;
            let u: f64 = g.random();
            if next <= 0.0 || u < (-2.0 * r * next / var).exp() {
                return k + 1;
            }
            r = next;
        }
        steps + 1
    });
    let mut counts = vec![0usize; steps + 2];
    for k in death {
        counts[k] += 1;
    }
    let mut alive = paths;
    let mut survival = Vec::with_capacity(steps + 1);
    for c in counts.iter().take(steps + 1) {
        alive -= c;
        survival.push(alive as f64 / paths as f64);
    }
    Ok(SurvivalCurve { times, survival })
}
