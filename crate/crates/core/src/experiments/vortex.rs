use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::relative_entropy;
use crate::error::Result;
use crate::experiments::params::{nearest, probe_grid, Overrides};
use crate::experiments::report::{Comparison, ExperimentReport, GridInfo};
use crate::grid::{
    invariant_gaussian, jabin_wang_phi, log_density_diagnostics, GridDensity, JabinWangReport, MeanFieldSolver, PdeConfig,
    ScoreMode,
};
use crate::kernels::{ConfinementPotential, RieszKernel};
use crate::numerics::fit_line;
use crate::sde::{run_particles, ParticleEnsemble, SdeConfig};
use crate::kernels::DriftSpec;

/// Parameters of the 2-D mean-field vortex flow with quadratic confinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexParams {
    pub n: usize,
    pub half_width: f64,
    pub dt: f64,
    pub t_end: f64,
    pub kappa: f64,
    pub strength: f64,
    /// `None`: two grid spacings.
    pub eps: Option<f64>,
    pub shift: [f64; 2],
    pub variance: f64,
    pub probe_step: f64,
    pub fit_window: [f64; 2],
    pub jabin_wang_times: Vec<f64>,
    pub jabin_wang_samples: usize,
    pub boundary_limit: f64,
}

impl Default for VortexParams {
    fn default() -> Self {
        VortexParams {
            n: 128,
            half_width: 4.0,
            dt: 2e-4,
            t_end: 2.0,
            kappa: 1.0,
            strength: 1.0,
            eps: None,
            shift: [0.8, 0.0],
            variance: 0.5,
            probe_step: 0.1,
            fit_window: [0.2, 2.0],
            jabin_wang_times: vec![0.5, 1.0, 2.0],
            jabin_wang_samples: 64,
            boundary_limit: 1e-4,
        }
    }
}

impl VortexParams {
    pub fn with_overrides(o: &Overrides) -> Self {
        let d = VortexParams::default();
        VortexParams {
            n: o.grid_n_or(d.n),
            half_width: o.half_width_or(d.half_width),
            dt: o.dt_or(d.dt),
            t_end: o.t_end_or(d.t_end),
            kappa: o.kappa_or(d.kappa),
            strength: o.strength_or(d.strength),
            eps: o.eps.or(d.eps),
            ..d
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn pde_config(&self) -> PdeConfig {
        PdeConfig {
            dt: self.dt,
            t_end: self.t_end,
            eps: self.eps,
            boundary_limit: self.boundary_limit,
            ..PdeConfig::default()
        }
    }

    fn grid(&self) -> GridInfo {
        GridInfo {
            dim: 2,
            n: self.n,
            half_width: self.half_width,
        }
    }
}

/// Probe records of one vortex run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexStudy {
    pub params: VortexParams,
    pub eps: f64,
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    pub grad_sup: Vec<f64>,
    pub hess_sup: Vec<f64>,
    pub orthogonality_sup: Vec<f64>,
    pub linf: Vec<f64>,
    pub l2: Vec<f64>,
    pub jabin_wang: Vec<(f64, JabinWangReport)>,
    pub max_mass_drift: f64,
    pub min_value: f64,
    pub reference_boundary_fraction: f64,
    pub runtime_seconds: f64,
}

struct Probe {
    entropy: f64,
    grad: f64,
    hess: f64,
    orth: f64,
    linf: f64,
    l2: f64,
    min: f64,
    jw: Option<JabinWangReport>,
}

pub fn vortex_study(p: &VortexParams) -> Result<VortexStudy> {
    let start = Instant::now();
    let confinement = ConfinementPotential::quadratic(p.kappa);
    let config = p.pde_config();
    let m_star = invariant_gaussian(&confinement, 2, p.n, p.half_width, p.boundary_limit)?;
    let m0 = GridDensity::gaussian(2, p.n, p.half_width, &p.shift, p.variance)?;
    let mut solver = MeanFieldSolver::log_riesz(RieszKernel::vortex(p.strength), &confinement, p.n, p.half_width, &config)?;
    let table = solver.table().expect("log-Riesz solver has a table").clone();
    let plan = solver.plan().expect("log-Riesz solver has a plan").clone();
    let eps = table.eps();
    let times = probe_grid(0.0, p.t_end, p.probe_step);
    let jw_steps: Vec<usize> = p.jabin_wang_times.iter().map(|t| (t / p.dt).round() as usize).collect();
    let run = solver.run(&m0, &config, &times, |m| {
        let diag = log_density_diagnostics(m, &m_star, Some(&plan))?;
        let step = (m.t() / p.dt).round() as usize;
        let jw = if jw_steps.contains(&step) {
            Some(jabin_wang_phi(m, &table, ScoreMode::Conservative, p.jabin_wang_samples)?)
        } else {
            None
        };
        Ok(Probe {
            entropy: relative_entropy(m, &m_star)?,
            grad: diag.grad_sup,
            hess: diag.hess_sup,
            orth: diag.orthogonality_sup,
            linf: m.max_value(),
            l2: m.lp_norm(2.0),
            min: m.min_value(),
            jw,
        })
    })?;
    let probes = &run.probes;
    Ok(VortexStudy {
        params: p.clone(),
        eps,
        times: probes.iter().map(|x| x.0).collect(),
        entropy: probes.iter().map(|x| x.1.entropy).collect(),
        grad_sup: probes.iter().map(|x| x.1.grad).collect(),
        hess_sup: probes.iter().map(|x| x.1.hess).collect(),
        orthogonality_sup: probes.iter().map(|x| x.1.orth).collect(),
        linf: probes.iter().map(|x| x.1.linf).collect(),
        l2: probes.iter().map(|x| x.1.l2).collect(),
        jabin_wang: probes.iter().filter_map(|x| x.1.jw.map(|j| (x.0, j))).collect(),
        max_mass_drift: run.max_mass_drift,
        min_value: probes.iter().map(|x| x.1.min).fold(f64::INFINITY, f64::min),
        reference_boundary_fraction: m_star.boundary_mass_fraction(),
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

fn window(times: &[f64], values: &[f64], w: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= w[0] - 1e-9 && **t <= w[1] + 1e-9)
        .map(|(t, v)| (*t, *v))
        .unzip()
}

/// Slope of `ln values` against `t` over the window.
pub fn log_slope(times: &[f64], values: &[f64], w: [f64; 2]) -> (f64, f64) {
    let (t, v) = window(times, values, w);
    let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let fit = fit_line(&t, &logs);
    (fit.slope, fit.r_squared)
}

impl VortexStudy {
    pub fn entropy_rate(&self) -> f64 {
        log_slope(&self.times, &self.entropy, self.params.fit_window).0
    }

    pub fn gradient_drop(&self) -> f64 {
        let a = nearest(&self.times, self.params.fit_window[0]);
        let b = nearest(&self.times, self.params.fit_window[1]);
        self.grad_sup[a] / self.grad_sup[b]
    }

    pub fn gradient_rate(&self) -> f64 {
        log_slope(&self.times, &self.grad_sup, self.params.fit_window).0
    }

    /// `max_k e_{k+1}/e_k` of the envelope `sup|∇²u|·√(t∧1)` after the
    /// window start.
    pub fn hessian_envelope_growth(&self) -> f64 {
        let env: Vec<f64> = self
            .times
            .iter()
            .zip(&self.hess_sup)
            .filter(|(t, _)| **t >= self.params.fit_window[0] - 1e-9)
            .map(|(t, h)| h * t.min(1.0).sqrt())
            .collect();
        env.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max)
    }

    pub fn entropy_monotone(&self) -> bool {
        self.entropy.windows(2).all(|w| w[1] < w[0])
    }

    /// Largest `‖m_t‖∞` after `t = 0.5` relative to the running maximum.
    pub fn linf_growth(&self) -> f64 {
        let mut running: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for (t, v) in self.times.iter().zip(&self.linf) {
            if *t >= 0.5 - 1e-9 && running > 0.0 {
                worst = worst.max(v / running);
            }
            running = running.max(*v);
        }
        worst
    }

    pub fn max_jabin_wang_residual(&self) -> f64 {
        self.jabin_wang.iter().map(|(_, r)| r.relative_residual()).fold(0.0, f64::max)
    }

    fn base_report(&self, name: &str) -> ExperimentReport {
        let mut r = ExperimentReport::new(name, 0);
        let p = &self.params;
        r.param("grid_n", p.n)
            .param("half_width", p.half_width)
            .param("dt", p.dt)
            .param("t_end", p.t_end)
            .param("kappa", p.kappa)
            .param("strength", p.strength)
            .param("eps", self.eps)
            .param("shift", p.shift)
            .param("variance", p.variance)
            .param("fit_window", p.fit_window)
            .param("boundary_limit", p.boundary_limit);
        r.provenance.grid = Some(p.grid());
        r.provenance.dt = Some(p.dt);
        r.provenance.runtime_seconds = self.runtime_seconds;
        r
    }

    pub fn entropy_report(&self) -> ExperimentReport {
        let mut r = self.base_report("vortex_entropy_decay");
        let k = self.params.kappa;
        r.series("entropy", self.times.clone(), self.entropy.clone(), true, Some(2.0 * k))
            .series("grad_u_sup", self.times.clone(), self.grad_sup.clone(), true, None)
            .series("hess_u_sup", self.times.clone(), self.hess_sup.clone(), true, None)
            .series("orthogonality_sup", self.times.clone(), self.orthogonality_sup.clone(), true, None)
            .series("linf", self.times.clone(), self.linf.clone(), false, None)
            .series("l2", self.times.clone(), self.l2.clone(), false, None)
            .scalar("max_mass_drift", self.max_mass_drift)
            .scalar("min_value", self.min_value)
            .scalar("reference_boundary_fraction", self.reference_boundary_fraction)
            .scalar("gradient_rate", self.gradient_rate());
        r.verdict("entropy_decay_rate", "entropy_rate", self.entropy_rate(), Comparison::AtMost, -0.9 * 2.0 * k);
        r.flag("entropy_monotone", self.entropy_monotone());
        r.verdict("gradient_drop", "gradient_drop", self.gradient_drop(), Comparison::AtLeast, 5.0);
        r.verdict("gradient_rate_negative", "gradient_rate", self.gradient_rate(), Comparison::Below, 0.0);
        r.verdict("hessian_envelope", "hessian_envelope_growth", self.hessian_envelope_growth(), Comparison::AtMost, 1.1);
        r.verdict("linf_bounded", "linf_growth", self.linf_growth(), Comparison::AtMost, 1.05);
        r
    }

    pub fn jabin_wang_report(&self) -> ExperimentReport {
        let mut r = self.base_report("jabin_wang_cancellation");
        let t: Vec<f64> = self.jabin_wang.iter().map(|x| x.0).collect();
        r.series("sup_phi", t.clone(), self.jabin_wang.iter().map(|x| x.1.sup_phi).collect(), false, None)
            .series("relative_residual", t, self.jabin_wang.iter().map(|x| x.1.relative_residual()).collect(), true, None)
            .scalar(
                "max_asymmetry",
                self.jabin_wang.iter().map(|x| x.1.max_asymmetry).fold(0.0, f64::max),
            );
        r.verdict("marginal_cancellation", "max_relative_residual", self.max_jabin_wang_residual(), Comparison::AtMost, 1e-6);
        r
    }
}

pub fn vortex_entropy_decay(o: &Overrides) -> Result<ExperimentReport> {
    Ok(vortex_study(&VortexParams::with_overrides(o))?.entropy_report())
}

pub fn jabin_wang_cancellation(o: &Overrides) -> Result<ExperimentReport> {
    Ok(vortex_study(&VortexParams::with_overrides(o))?.jabin_wang_report())
}

/// Two point vortices in quadratic confinement: the separation shrinks
/// exactly like `e^{−κt}`.
pub fn vortex_two_particle(o: &Overrides) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (kappa, dt, t_end, strength) = (o.kappa_or(1.0), o.dt_or(1e-4), o.t_end_or(1.0), o.strength_or(1.0));
    let drift = DriftSpec::log_riesz(RieszKernel::vortex(strength), None, ConfinementPotential::quadratic(kappa), 0.0)?;
    let mut e = ParticleEnsemble::new(vec![0.6, 0.1, -0.3, -0.2], 2, o.seed_or(0))?;
    let r0 = e.min_distance();
    run_particles(&mut e, &drift, &SdeConfig::rk4(dt), t_end, |_, _| Ok(()))?;
    let ratio = e.min_distance() / r0;
    let exact = (-kappa * t_end).exp();
    let mut r = ExperimentReport::new("vortex_two_particle", o.seed_or(0));
    r.param("kappa", kappa).param("dt", dt).param("t_end", t_end).param("strength", strength).param("scheme", "rk4");
    r.scalar("radius_ratio", ratio).scalar("exact_ratio", exact);
    r.verdict("radius_oracle", "radius_error", (ratio - exact).abs(), Comparison::AtMost, 1e-6);
    r.provenance.dt = Some(dt);
    r.provenance.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_vortex_study_has_expected_shape() {
        let p = VortexParams {
            n: 32,
            dt: 2e-3,
            t_end: 1.0,
            jabin_wang_times: vec![0.5],
            jabin_wang_samples: 16,
            boundary_limit: 1e-3,
            ..VortexParams::default()
        };
        let s = vortex_study(&p).unwrap();
        assert_eq!(s.times.len(), 11);
        assert_eq!(s.jabin_wang.len(), 1);
        assert!(s.entropy_monotone());
        assert!(s.entropy_rate() < -1.5);
        assert!(s.max_jabin_wang_residual() < 1e-10);
        assert!(s.max_mass_drift < 1e-12);
    }

    #[test]
    fn two_particle_preset_passes() {
        let r = vortex_two_particle(&Overrides::default()).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
