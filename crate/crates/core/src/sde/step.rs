use serde::{Deserialize, Serialize};

use crate::error::{CollisionEvent, Error, Result};
use crate::kernels::{DriftSpec, DriftVariant, RieszKernel};
use crate::numerics::parallel;
use crate::sde::ensemble::ParticleEnsemble;
use crate::sde::monitors::energy_functional;
use crate::sde::rng::{self, Lane};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    /// Classical RK4; deterministic dynamics (σ = 0) only.
    Rk4Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Mollification radius of the interaction (0: raw kernel). Must match
    /// the drift's table.
    pub mollification_eps: f64,
    /// Pairs closer than this trigger the collision monitor.
    pub collision_threshold: f64,
    pub monitor_energy: bool,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig {
            dt: 1e-3,
            scheme: Scheme::EulerMaruyama,
            mollification_eps: 0.0,
            collision_threshold: 1e-4,
            monitor_energy: false,
        }
    }
}

impl SdeConfig {
    pub fn euler(dt: f64) -> Self {
        SdeConfig {
            dt,
            ..Default::default()
        }
    }

    pub fn rk4(dt: f64) -> Self {
        SdeConfig {
            dt,
            scheme: Scheme::Rk4Deterministic,
            ..Default::default()
        }
    }

    pub fn validate(&self, drift: &DriftSpec) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.scheme == Scheme::Rk4Deterministic && drift.sigma != 0.0 {
            return Err(Error::invalid("scheme", "rk4_deterministic requires sigma = 0"));
        }
        if !(self.mollification_eps >= 0.0) {
            return Err(Error::invalid("eps", "must be nonnegative"));
        }
        if !(self.collision_threshold >= 0.0) {
            return Err(Error::invalid("collision_threshold", "must be nonnegative"));
        }
        if let DriftVariant::LogRiesz { .. } = drift.variant {
            if drift.mollification_eps() != self.mollification_eps {
                return Err(Error::invalid(
                    "eps",
                    format!(
                        "config asks for {} but the drift is mollified at {}",
                        self.mollification_eps,
                        drift.mollification_eps()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// What happened during one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Minimum pairwise distance before the step (interacting log-Riesz
    /// drifts only).
    pub min_distance: Option<f64>,
    /// Near-collisions below the threshold under a mollified kernel.
    pub events: Vec<CollisionEvent>,
    /// Energy after the step when monitoring is on.
    pub energy: Option<f64>,
}

fn interaction_kernel(drift: &DriftSpec) -> Option<&RieszKernel> {
    match &drift.variant {
        DriftVariant::LogRiesz { kernel, .. } => Some(kernel),
        _ => None,
    }
}

/// Drift of every particle at configuration `x` (Jacobi: all from `x`).
pub(crate) fn drift_field(drift: &DriftSpec, t: f64, x: &[f64], d: usize, out: &mut [f64]) -> Result<()> {
    parallel::try_for_chunks(out, d, |i, o| drift.particle_drift(t, i, x, d, o))
}

/// Collision bookkeeping shared by the plain and coupled steppers.
pub(crate) fn collision_check(
    ensemble: &ParticleEnsemble,
    drift: &DriftSpec,
    config: &SdeConfig,
    report: &mut StepReport,
) -> Result<()> {
    if interaction_kernel(drift).is_none() || ensemble.len() < 2 {
        return Ok(());
    }
    let (i, j, dist) = ensemble.closest_pair().expect("at least two particles");
    report.min_distance = Some(dist);
    if dist <= config.collision_threshold {
        let event = CollisionEvent {
            i,
            j,
            distance: dist,
            t: ensemble.t(),
        };
        if drift.uses_raw_kernel() {
            return Err(Error::Collision(event));
        }
        report.events.push(event);
    }
    Ok(())
}

/// One step of the particle system, in place. On error the ensemble is left
/// untouched.
pub fn step_particles(
    ensemble: &mut ParticleEnsemble,
    drift: &DriftSpec,
    config: &SdeConfig,
) -> Result<StepReport> {
    config.validate(drift)?;
    let mut report = StepReport::default();
    collision_check(ensemble, drift, config, &mut report)?;
    let d = ensemble.dim();
    let t = ensemble.t();
    let dt = config.dt;
    let next = match config.scheme {
        Scheme::EulerMaruyama => {
            let mut b = vec![0.0; ensemble.positions().len()];
            drift_field(drift, t, ensemble.positions(), d, &mut b)?;
            let scale = (2.0 * drift.sigma * drift.sigma * dt).sqrt();
            let (seed, step) = (ensemble.seed(), ensemble.step_count());
            let keys = ensemble.keys();
            let x = ensemble.positions();
            let mut next = vec![0.0; x.len()];
            parallel::for_chunks(&mut next, d, |i, out| {
                if scale > 0.0 {
                    rng::normals(seed, Lane::Noise, keys[i], step, out);
                } else {
                    out.iter_mut().for_each(|o| *o = 0.0);
                }
                for k in 0..d {
                    out[k] = x[i * d + k] + b[i * d + k] * dt + scale * out[k];
                }
            });
            next
        }
        Scheme::Rk4Deterministic => rk4_step(drift, t, ensemble.positions(), d, dt)?,
    };
    if let Some(k) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "dt",
            format!("step produced a non-finite coordinate (index {k}); reduce dt"),
        ));
    }
    ensemble.set_positions(next)?;
    ensemble.advance(dt);
    if config.monitor_energy {
        if let Some(kernel) = interaction_kernel(drift) {
            report.energy = Some(energy_functional(ensemble, kernel)?);
        }
    }
    Ok(report)
}

pub(crate) fn rk4_step(drift: &DriftSpec, t: f64, x: &[f64], d: usize, dt: f64) -> Result<Vec<f64>> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    drift_field(drift, t, x, d, &mut k1)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    drift_field(drift, t + 0.5 * dt, &tmp, d, &mut k2)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    drift_field(drift, t + 0.5 * dt, &tmp, d, &mut k3)?;
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    drift_field(drift, t + dt, &tmp, d, &mut k4)?;
    Ok((0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Steps until `t_end` (the last step is not shortened; steps are counted as
/// `round((t_end − t)/dt)`), calling `probe` after every step.
pub fn run_particles(
    ensemble: &mut ParticleEnsemble,
    drift: &DriftSpec,
    config: &SdeConfig,
    t_end: f64,
    mut probe: impl FnMut(&ParticleEnsemble, &StepReport) -> Result<()>,
) -> Result<()> {
    let steps = ((t_end - ensemble.t()) / config.dt).round().max(0.0) as u64;
    for _ in 0..steps {
        let report = step_particles(ensemble, drift, config)?;
        probe(ensemble, &report)?;
    }
    Ok(())
}
