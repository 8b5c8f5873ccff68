use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fp_step_in_place, ConvolutionMode, ConvolutionPlan, FluxScheme, FpWorkspace, GridDensity, GridField, KernelSampling};
use crate::kernels::{BumpProfile, ConfinementPotential, MollifiedKernel, Mollifier, RieszKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Mollification radius; `None` means `2·dx`.
    pub eps: Option<f64>,
    pub profile: BumpProfile,
    pub convolution: ConvolutionMode,
    pub flux: FluxScheme,
    pub sampling: KernelSampling,
    pub sigma: f64,
    /// Boundary-mass fraction tolerated in `m₀`.
    pub boundary_limit: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            dt: 2e-4,
            t_end: 2.0,
            eps: None,
            profile: BumpProfile::Exponential,
            convolution: ConvolutionMode::Spectral,
            flux: FluxScheme::UpwindHybrid,
            sampling: KernelSampling::Exact,
            sigma: 1.0,
            boundary_limit: crate::grid::BOUNDARY_MASS_LIMIT,
        }
    }
}

impl PdeConfig {
    pub fn resolved_eps(&self, dx: f64) -> f64 {
        self.eps.unwrap_or(2.0 * dx)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be nonnegative, got {}", self.sigma)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::invalid("eps", format!("must be positive, got {e}")));
            }
        }
        Ok(())
    }
}

/// Pair interaction entering the drift as `∫ w(x − y) m(dy)`.
pub type PairForce = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Explicit finite-volume solver for `∂ₜm = σ²Δm − ∇·(m (w ⋆ m − ∇U))`.
#[derive(Debug, Clone)]
pub struct MeanFieldSolver {
    dim: usize,
    n: usize,
    half_width: f64,
    sigma: f64,
    flux: FluxScheme,
    mode: ConvolutionMode,
    plan: Option<ConvolutionPlan>,
    table: Option<Arc<MollifiedKernel>>,
    confinement: GridField,
    drift: GridField,
    ws: FpWorkspace,
}

fn confinement_field(dim: usize, n: usize, half_width: f64, u: &ConfinementPotential) -> Result<GridField> {
    let probe = GridDensity::new(dim, n, half_width, vec![0.0; n.pow(dim as u32)])?;
    let mut field = GridField::zeros(dim, n);
    let mut g = [0.0; 2];
    for k in 0..probe.len() {
        let x = probe.point(k);
        u.gradient_into(&x[..dim], &mut g[..dim])?;
        for c in 0..dim {
            field.components[c][k] = -g[c];
        }
    }
    Ok(field)
}

impl MeanFieldSolver {
    fn build(
        dim: usize,
        n: usize,
        half_width: f64,
        confinement: &ConfinementPotential,
        plan: Option<ConvolutionPlan>,
        table: Option<Arc<MollifiedKernel>>,
        config: &PdeConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(MeanFieldSolver {
            dim,
            n,
            half_width,
            sigma: config.sigma,
            flux: config.flux,
            mode: config.convolution,
            plan,
            table,
            confinement: confinement_field(dim, n, half_width, confinement)?,
            drift: GridField::zeros(dim, n),
            ws: FpWorkspace::default(),
        })
    }

    /// Linear Fokker–Planck flow in the confinement alone.
    pub fn linear(dim: usize, n: usize, half_width: f64, confinement: &ConfinementPotential, config: &PdeConfig) -> Result<Self> {
        Self::build(dim, n, half_width, confinement, None, None, config)
    }

    /// The `ε`-regularised log/Riesz flow on a 2-D grid.
    pub fn log_riesz(
        kernel: RieszKernel,
        confinement: &ConfinementPotential,
        n: usize,
        half_width: f64,
        config: &PdeConfig,
    ) -> Result<Self> {
        let dim = kernel.dim();
        if dim != 2 {
            return Err(Error::invalid("d", "the grid solver handles d = 2 kernels"));
        }
        let dx = 2.0 * half_width / n as f64;
        let eps = config.resolved_eps(dx);
        let r_max = 2.0 * half_width * (dim as f64).sqrt() + 4.0 * dx;
        let table = Arc::new(MollifiedKernel::new(kernel, Mollifier::new(eps, config.profile, dim)?, r_max)?);
        let plan = ConvolutionPlan::riesz(&table, dim, n, half_width, config.sampling, false)?;
        Self::build(dim, n, half_width, confinement, Some(plan), Some(table), config)
    }

    /// Flow with a smooth pair force `w`.
    pub fn smooth(
        dim: usize,
        n: usize,
        half_width: f64,
        w: PairForce,
        confinement: &ConfinementPotential,
        config: &PdeConfig,
    ) -> Result<Self> {
        let dx = 2.0 * half_width / n as f64;
        let plan = ConvolutionPlan::new(dim, n, dx, dim, |z, out| w(z, out))?;
        Self::build(dim, n, half_width, confinement, Some(plan), None, config)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The mollified kernel table of a log/Riesz solver.
    pub fn table(&self) -> Option<&Arc<MollifiedKernel>> {
        self.table.as_ref()
    }

    pub fn plan(&self) -> Option<&ConvolutionPlan> {
        self.plan.as_ref()
    }

    /// Interaction field `w ⋆ m` (zero without interaction).
    pub fn interaction_field(&self, m: &GridDensity) -> Result<GridField> {
        self.check_grid(m)?;
        let mut field = GridField::zeros(self.dim, self.n);
        if let Some(plan) = &self.plan {
            field.components = match self.mode {
                ConvolutionMode::Spectral => plan.apply(m.values()),
                ConvolutionMode::Direct => plan.apply_direct(m.values()),
            };
        }
        Ok(field)
    }

    /// Full drift `w ⋆ m − ∇U` at cell centres.
    pub fn drift_field(&self, m: &GridDensity) -> Result<GridField> {
        let mut field = self.interaction_field(m)?;
        for (f, c) in field.components.iter_mut().zip(&self.confinement.components) {
            for (a, b) in f.iter_mut().zip(c) {
                *a += b;
            }
        }
        Ok(field)
    }

    fn check_grid(&self, m: &GridDensity) -> Result<()> {
        if m.dim() != self.dim || m.n() != self.n || m.half_width() != self.half_width {
            return Err(Error::Shape("density grid differs from the solver grid".into()));
        }
        Ok(())
    }

    pub fn step(&mut self, m: &mut GridDensity, dt: f64) -> Result<()> {
        self.drift = self.drift_field(m)?;
        fp_step_in_place(m, &self.drift, self.sigma, dt, self.flux, &mut self.ws)
    }

    /// Advances `m₀` to `t_end` in steps of `dt`, calling `probe` at every
    /// requested time (rounded to the step lattice).
    pub fn run<R>(
        &mut self,
        m0: &GridDensity,
        config: &PdeConfig,
        probe_times: &[f64],
        mut probe: impl FnMut(&GridDensity) -> Result<R>,
    ) -> Result<MeanFieldRun<R>> {
        config.validate()?;
        self.check_grid(m0)?;
        m0.check_box(config.boundary_limit)?;
        let steps = (config.t_end / config.dt).round() as usize;
        let mut probe_steps: Vec<usize> = probe_times
            .iter()
            .map(|&t| ((t - m0.t()) / config.dt).round().max(0.0) as usize)
            .filter(|&s| s <= steps)
            .collect();
        probe_steps.sort_unstable();
        probe_steps.dedup();
        let mut m = m0.clone();
        let t0 = m0.t();
        let mut probes = Vec::with_capacity(probe_steps.len());
        let mut next = probe_steps.iter().peekable();
        let mut max_mass_drift: f64 = 0.0;
        let mass0 = m0.mass();
        for k in 0..=steps {
            if k > 0 {
                self.step(&mut m, config.dt)?;
                m.set_t(t0 + k as f64 * config.dt);
                max_mass_drift = max_mass_drift.max((m.mass() - mass0).abs());
            }
            while next.peek().is_some_and(|&&s| s == k) {
                next.next();
                probes.push((m.t(), probe(&m)?));
            }
        }
        Ok(MeanFieldRun {
            final_state: m,
            probes,
            steps,
            max_mass_drift,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MeanFieldRun<R> {
    pub final_state: GridDensity,
    pub probes: Vec<(f64, R)>,
    pub steps: usize,
    pub max_mass_drift: f64,
}

/// One-shot wrapper around [`MeanFieldSolver::log_riesz`] and
/// [`MeanFieldSolver::run`].
pub fn run_meanfield<R>(
    m0: &GridDensity,
    kernel: RieszKernel,
    confinement: &ConfinementPotential,
    config: &PdeConfig,
    probe_times: &[f64],
    probe: impl FnMut(&GridDensity) -> Result<R>,
) -> Result<MeanFieldRun<R>> {
    let mut solver = MeanFieldSolver::log_riesz(kernel, confinement, m0.n(), m0.half_width(), config)?;
    solver.run(m0, config, probe_times, probe)
}
