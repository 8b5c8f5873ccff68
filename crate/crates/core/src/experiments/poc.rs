use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{marginal_kl_pooled, ChaosEstimate, KlEstimator};
use crate::error::Result;
use crate::experiments::params::Overrides;
use crate::experiments::report::{Comparison, ExperimentReport, GridInfo};
use crate::experiments::vortex::log_slope;
use crate::grid::{GridDensity, GridSampler, MeanFieldSolver, PdeConfig};
use crate::kernels::{ConfinementPotential, DriftSpec, RieszKernel};
use crate::numerics::fit_line;
use crate::sde::rng::{self, Lane};
use crate::sde::{step_particles, ParticleEnsemble, SdeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocParams {
    pub n: usize,
    pub half_width: f64,
    pub pde_dt: f64,
    pub particle_dt: f64,
    pub eps: f64,
    pub kappa: f64,
    pub strength: f64,
    pub sizes: Vec<usize>,
    pub replicas: usize,
    /// Probe at which the `N`-scaling is read.
    pub t_scaling: f64,
    /// Probes of the time series at the largest `N`.
    pub t_series: Vec<f64>,
    pub seed: u64,
    /// Estimator behind the verdicts; both are always reported.
    pub estimator: KlEstimator,
}

impl Default for PocParams {
    fn default() -> Self {
        PocParams {
            n: 128,
            half_width: 4.0,
            pde_dt: 2e-4,
            particle_dt: 1e-2,
            eps: 0.125,
            kappa: 1.0,
            strength: 1.0,
            sizes: vec![64, 256, 1024],
            replicas: 32,
            t_scaling: 1.0,
            t_series: vec![0.5, 1.0, 2.0],
            seed: 2024,
            estimator: KlEstimator::KdeGrid,
        }
    }
}

impl PocParams {
    pub fn with_overrides(o: &Overrides) -> Self {
        let d = PocParams::default();
        PocParams {
            n: o.grid_n_or(d.n),
            half_width: o.half_width_or(d.half_width),
            particle_dt: o.dt_or(d.particle_dt),
            eps: o.eps.unwrap_or(d.eps),
            kappa: o.kappa_or(d.kappa),
            strength: o.strength_or(d.strength),
            sizes: o.particles.map(|n| vec![n / 16, n / 4, n]).unwrap_or(d.sizes.clone()),
            seed: o.seed_or(d.seed),
            estimator: o.estimator.unwrap_or(d.estimator),
            ..d
        }
    }

    fn probe_times(&self) -> Vec<f64> {
        let mut t = self.t_series.clone();
        t.push(self.t_scaling);
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// Anisotropic, off-centre initial law.
pub fn poc_initial(n: usize, half_width: f64) -> Result<GridDensity> {
    GridDensity::normalized_from_fn(2, n, half_width, |x| {
        (-((x[0] - 0.5).powi(2) / (2.0 * 0.25) + (x[1] + 0.2).powi(2) / (2.0 * 0.5))).exp()
    })
}

/// KL of one configuration against the mean-field law at each probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocRun {
    pub n: usize,
    pub times: Vec<f64>,
    pub kde: Vec<ChaosEstimate>,
    pub knn: Vec<ChaosEstimate>,
    /// Same estimator on i.i.d. draws from the reference at matched sample size.
    pub iid: Vec<ChaosEstimate>,
}

fn mean_field_path(p: &PocParams, m0: &GridDensity, times: &[f64]) -> Result<(Vec<GridDensity>, DriftSpec)> {
    let confinement = ConfinementPotential::quadratic(p.kappa);
    let config = PdeConfig {
        dt: p.pde_dt,
        t_end: times.iter().cloned().fold(0.0, f64::max),
        eps: Some(p.eps),
        boundary_limit: 1e-4,
        ..PdeConfig::default()
    };
    let kernel = RieszKernel::vortex(p.strength);
    let mut solver = MeanFieldSolver::log_riesz(kernel.clone(), &confinement, p.n, p.half_width, &config)?;
    let table = solver.table().expect("log-Riesz solver").clone();
    let run = solver.run(m0, &config, times, |m| Ok(m.clone()))?;
    let drift = DriftSpec::log_riesz(kernel, Some(table), confinement, 1.0)?;
    Ok((run.probes.into_iter().map(|x| x.1).collect(), drift))
}

fn iid_replicas(m: &GridDensity, n: usize, replicas: usize, seed: u64) -> Result<Vec<ParticleEnsemble>> {
    let sampler = GridSampler::new(m)?;
    (0..replicas)
        .map(|r| {
            let mut g = rng::stream(seed, Lane::Aux, 0x11d + r as u64, n as u64);
            let mut pts = vec![0.0; 2 * n];
            for x in pts.chunks_mut(2) {
                sampler.sample(&mut g, x);
            }
            ParticleEnsemble::new(pts, 2, seed + r as u64)
        })
        .collect()
}

fn particle_runs(p: &PocParams, m0: &GridDensity, refs: &[GridDensity], times: &[f64], drift: &DriftSpec) -> Result<Vec<PocRun>> {
    let sampler = GridSampler::new(m0)?;
    let config = SdeConfig {
        mollification_eps: p.eps,
        ..SdeConfig::euler(p.particle_dt)
    };
    let mut out = Vec::new();
    for &n in &p.sizes {
        let horizon = if n == *p.sizes.iter().max().expect("sizes") { times.len() } else { times.iter().position(|t| *t >= p.t_scaling - 1e-12).expect("scaling probe") + 1 };
        let mut ens = (0..p.replicas)
            .map(|r| ParticleEnsemble::sample(n, 2, p.seed + 1000 * n as u64 + r as u64, |g, x| sampler.sample(g, x)))
            .collect::<Result<Vec<_>>>()?;
        let mut run = PocRun {
            n,
            times: Vec::new(),
            kde: Vec::new(),
            knn: Vec::new(),
            iid: Vec::new(),
        };
        for (k, &t) in times.iter().take(horizon).enumerate() {
            let steps = ((t - ens[0].t()) / p.particle_dt).round() as usize;
            for e in ens.iter_mut() {
                for _ in 0..steps {
                    step_particles(e, drift, &config)?;
                }
            }
            let refs_t = &refs[k];
            let views: Vec<&ParticleEnsemble> = ens.iter().collect();
            run.times.push(t);
            run.kde.push(marginal_kl_pooled(&views, refs_t, KlEstimator::KdeGrid, 1)?);
            run.knn.push(marginal_kl_pooled(&views, refs_t, KlEstimator::Knn, 1)?);
            let control = iid_replicas(refs_t, n, p.replicas, p.seed ^ 0x5eed)?;
            let cviews: Vec<&ParticleEnsemble> = control.iter().collect();
            run.iid.push(marginal_kl_pooled(&cviews, refs_t, KlEstimator::KdeGrid, 1)?);
        }
        out.push(run);
    }
    Ok(out)
}

/// Particle systems at several `N` against the grid mean-field law.
pub fn poc_study(p: &PocParams) -> Result<Vec<PocRun>> {
    let m0 = poc_initial(p.n, p.half_width)?;
    let times = p.probe_times();
    let (refs, drift) = mean_field_path(p, &m0, &times)?;
    particle_runs(p, &m0, &refs, &times, &drift)
}

/// Verdict inputs of the scaling study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PocSummary {
    /// `min_k (KL_k − KL_{k+1}) / (2·√(se_k² + se_{k+1}²))` at the scaling probe.
    pub decrease_margin: f64,
    pub loglog_slope: f64,
    /// `max_k (KL_{k+1} − KL_k) − 2·√(se_k² + se_{k+1}²)` along the series.
    pub series_excess: f64,
}

fn combined(a: &ChaosEstimate, b: &ChaosEstimate) -> f64 {
    2.0 * a.stderr.hypot(b.stderr)
}

fn pick(estimator: KlEstimator, r: &PocRun) -> &[ChaosEstimate] {
    match estimator {
        KlEstimator::KdeGrid => &r.kde,
        KlEstimator::Knn => &r.knn,
    }
}

pub fn summarize(p: &PocParams, runs: &[PocRun]) -> PocSummary {
    let at = |r: &PocRun| pick(p.estimator, r)[r.times.iter().position(|t| (t - p.t_scaling).abs() < 1e-9).expect("scaling probe")];
    let scaling: Vec<ChaosEstimate> = runs.iter().map(at).collect();
    let decrease_margin = scaling
        .windows(2)
        .map(|w| (w[0].value - w[1].value) / combined(&w[0], &w[1]))
        .fold(f64::INFINITY, f64::min);
    let ln_n: Vec<f64> = runs.iter().map(|r| (r.n as f64).ln()).collect();
    let ln_kl: Vec<f64> = scaling.iter().map(|e| e.value.max(1e-300).ln()).collect();
    let loglog_slope = fit_line(&ln_n, &ln_kl).slope;
    let big = runs.last().expect("runs");
    let series_excess = pick(p.estimator, big)
        .windows(2)
        .map(|w| w[1].value - w[0].value - combined(&w[0], &w[1]))
        .fold(f64::NEG_INFINITY, f64::max);
    PocSummary {
        decrease_margin,
        loglog_slope,
        series_excess,
    }
}

const SWEEP: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];

/// Decay rate of the `N = 256` marginal KL over `t ∈ {0.5, 1, 2}` as the
/// vortex strength grows (descriptive).
fn strength_sweep(p: &PocParams) -> Result<Vec<f64>> {
    SWEEP
        .iter()
        .map(|&m| {
            let q = PocParams {
                n: 64,
                pde_dt: 5e-4,
                strength: m,
                sizes: vec![256],
                t_scaling: 2.0,
                ..p.clone()
            };
            let run = &poc_study(&q)?[0];
            let values: Vec<f64> = run.kde.iter().map(|e| e.value.max(1e-300)).collect();
            Ok(log_slope(&run.times, &values, [0.0, 10.0]).0)
        })
        .collect()
}

/// The scaling study and its verdicts, without the strength sweep.
pub fn poc_scaling_report(p: &PocParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    let runs = poc_study(p)?;
    let s = summarize(p, &runs);

    let mut r = ExperimentReport::new("vortex_poc_scaling", p.seed);
    r.param("grid_n", p.n)
        .param("half_width", p.half_width)
        .param("pde_dt", p.pde_dt)
        .param("particle_dt", p.particle_dt)
        .param("eps", p.eps)
        .param("kappa", p.kappa)
        .param("strength", p.strength)
        .param("sizes", &p.sizes)
        .param("replicas", p.replicas)
        .param("t_scaling", p.t_scaling)
        .param("t_series", &p.t_series)
        .param("estimator", p.estimator)
        .param("initial_chaos", "iid");
    for run in &runs {
        let n = run.n;
        let series = |v: &[ChaosEstimate]| v.iter().map(|e| e.value).collect::<Vec<_>>();
        r.series(&format!("kl_kde_n{n}"), run.times.clone(), series(&run.kde), true, Some(2.0 * p.kappa))
            .series(&format!("kl_kde_stderr_n{n}"), run.times.clone(), run.kde.iter().map(|e| e.stderr).collect(), false, None)
            .series(&format!("kl_knn_n{n}"), run.times.clone(), series(&run.knn), false, None)
            .series(&format!("kl_iid_control_n{n}"), run.times.clone(), series(&run.iid), false, None);
    }
    r.verdict("strict_decrease_in_n", "decrease_margin", s.decrease_margin, Comparison::Above, 1.0);
    r.verdict("loglog_slope", "loglog_slope", s.loglog_slope, Comparison::AtMost, -0.5);
    r.verdict("nonincreasing_in_t", "series_excess", s.series_excess, Comparison::AtMost, 0.0);
    r.provenance.grid = Some(GridInfo {
        dim: 2,
        n: p.n,
        half_width: p.half_width,
    });
    r.provenance.dt = Some(p.particle_dt);
    r.provenance.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

pub fn vortex_poc_scaling(o: &Overrides) -> Result<ExperimentReport> {
    let start = Instant::now();
    let p = PocParams::with_overrides(o);
    let mut r = poc_scaling_report(&p)?;
    let sweep = strength_sweep(&p)?;
    r.param("strength_sweep", SWEEP);
    r.series("sweep_decay_rate", SWEEP.to_vec(), sweep, false, None);
    r.provenance.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_study_runs_and_matches_control_at_time_zero() {
        let p = PocParams {
            n: 32,
            pde_dt: 2e-3,
            particle_dt: 1e-2,
            eps: 0.5,
            sizes: vec![50, 100],
            replicas: 2,
            t_scaling: 0.1,
            t_series: vec![0.0, 0.1],
            ..PocParams::default()
        };
        let runs = poc_study(&p).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[1].times, vec![0.0, 0.1]);
        assert_eq!(runs[0].times, vec![0.0, 0.1]);
        // at t = 0 particles and control are both i.i.d. from m₀
        let (a, b) = (runs[1].kde[0], runs[1].iid[0]);
        assert!((a.value - b.value).abs() < 4.0 * a.stderr.hypot(b.stderr) + 1e-3, "{a:?} {b:?}");
    }
}
