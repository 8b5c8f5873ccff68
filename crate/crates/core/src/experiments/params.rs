use serde::{Deserialize, Serialize};

use crate::diagnostics::KlEstimator;

/// Numeric overrides accepted by every preset; `None` keeps the preset's
/// default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub particles: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub grid_n: Option<usize>,
    pub half_width: Option<f64>,
    pub eps: Option<f64>,
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
    pub strength: Option<f64>,
    pub seed: Option<u64>,
    /// KL estimator behind the chaos verdicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<KlEstimator>,
}

impl Overrides {
    pub fn particles_or(&self, v: usize) -> usize {
        self.particles.unwrap_or(v)
    }
    pub fn dt_or(&self, v: f64) -> f64 {
        self.dt.unwrap_or(v)
    }
    pub fn t_end_or(&self, v: f64) -> f64 {
        self.t_end.unwrap_or(v)
    }
    pub fn grid_n_or(&self, v: usize) -> usize {
        self.grid_n.unwrap_or(v)
    }
    pub fn half_width_or(&self, v: f64) -> f64 {
        self.half_width.unwrap_or(v)
    }
    pub fn sigma_or(&self, v: f64) -> f64 {
        self.sigma.unwrap_or(v)
    }
    pub fn kappa_or(&self, v: f64) -> f64 {
        self.kappa.unwrap_or(v)
    }
    pub fn strength_or(&self, v: f64) -> f64 {
        self.strength.unwrap_or(v)
    }
    pub fn seed_or(&self, v: u64) -> u64 {
        self.seed.unwrap_or(v)
    }
}

/// Evenly spaced probe times `t₀, t₀ + h, …, t₁`.
pub fn probe_grid(t0: f64, t1: f64, h: f64) -> Vec<f64> {
    let k = ((t1 - t0) / h).round() as usize;
    (0..=k).map(|i| t0 + i as f64 * h).collect()
}

/// Index of the entry of `times` closest to `t`.
pub fn nearest(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
