use std::sync::Arc;
use std::time::Instant;

use crate::diagnostics::perturbation_potential;
use crate::error::Result;
use crate::experiments::params::{probe_grid, Overrides};
use crate::experiments::report::{Comparison, ExperimentReport, GridInfo};
use crate::experiments::vortex::log_slope;
use crate::grid::{GridDensity, MeanFieldSolver, PairForce, PdeConfig};
use crate::kernels::ConfinementPotential;

/// `−∇W` for the attractive Gaussian well `W(z) = −J e^{−|z|²/2}`.
pub fn gaussian_attraction(strength: f64) -> PairForce {
    Arc::new(move |z: &[f64], out: &mut [f64]| {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let f = -strength * (-0.5 * r2).exp();
        for (o, v) in out.iter_mut().zip(z) {
            *o = f * v;
        }
    })
}

/// Smooth attraction in the double well `x⁴/4 − x²/2` (convex beyond
/// `|x| = 1`): `m_*` from a long run, then `‖φ_t‖∞` and `‖m_t − m_*‖_TV`
/// along a flow started off equilibrium.
pub fn perturbation_convergence(o: &Overrides) -> Result<ExperimentReport> {
    let start = Instant::now();
    let n = o.grid_n_or(256);
    let half_width = o.half_width_or(4.0);
    let dt = o.dt_or(1.5e-4);
    let t_end = o.t_end_or(8.0);
    let strength = o.strength_or(0.5);
    let sigma = o.sigma_or(1.0);
    let t_relax = 20.0;
    let confinement = ConfinementPotential::double_well(1.0, 1.0).with_convexity(2.0, 1.0);
    let base = PdeConfig {
        dt,
        sigma,
        ..PdeConfig::default()
    };
    let mut solver = MeanFieldSolver::smooth(1, n, half_width, gaussian_attraction(strength), &confinement, &base)?;

    let relax = PdeConfig { t_end: t_relax, ..base.clone() };
    let seed_state = GridDensity::gaussian(1, n, half_width, &[0.0], 0.5)?;
    let mut m_star = solver.run(&seed_state, &relax, &[], |_| Ok(()))?.final_state;
    m_star.set_t(0.0);
    let residual = {
        let mut next = m_star.clone();
        solver.step(&mut next, dt)?;
        next.l1_distance(&m_star)? / dt
    };

    let config = PdeConfig { t_end, ..base };
    let m0 = GridDensity::gaussian(1, n, half_width, &[0.8], 0.3)?;
    let times = probe_grid(0.0, t_end, 0.25);
    let drift = solver.clone();
    let run = solver.run(&m0, &config, &times, |m| {
        let norms = perturbation_potential(m, &m_star, |d| drift.drift_field(d))?;
        Ok((norms.phi_sup, m.l1_distance(&m_star)?))
    })?;
    let t: Vec<f64> = run.probes.iter().map(|p| p.0).collect();
    let phi: Vec<f64> = run.probes.iter().map(|p| p.1 .0).collect();
    let tv: Vec<f64> = run.probes.iter().map(|p| p.1 .1).collect();
    let shape: Vec<f64> = phi.iter().zip(&tv).map(|(p, d)| p / d.sqrt()).collect();
    let phi_ratio = phi[phi.len() - 1] / phi[0];
    let window = [0.2, 0.5 * t_end];

    let mut r = ExperimentReport::new("perturbation_convergence", o.seed_or(0));
    r.param("grid_n", n)
        .param("half_width", half_width)
        .param("dt", dt)
        .param("t_end", t_end)
        .param("relaxation_time", t_relax)
        .param("strength", strength)
        .param("sigma", sigma)
        .param("confinement", "x^4/4 - x^2/2")
        .param("m0_mean", 0.8)
        .param("m0_variance", 0.3)
        .param("fit_window", window);
    r.series("phi_sup", t.clone(), phi.clone(), true, None)
        .series("tv_distance", t.clone(), tv.clone(), true, None)
        .series("phi_over_sqrt_tv", t.clone(), shape.clone(), false, None)
        .scalar("phi_rate", log_slope(&t, &phi, window).0)
        .scalar("tv_rate", log_slope(&t, &tv, window).0)
        .scalar("max_phi_over_sqrt_tv", shape.iter().cloned().fold(0.0, f64::max))
        .scalar("equilibrium_residual", residual)
        .scalar("max_mass_drift", run.max_mass_drift);
    r.verdict("phi_decay", "phi_ratio", phi_ratio, Comparison::Below, 0.1);
    r.provenance.grid = Some(GridInfo { dim: 1, n, half_width });
    r.provenance.dt = Some(dt);
    r.provenance.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attraction_is_odd_and_bounded() {
        let w = gaussian_attraction(2.0);
        let (mut a, mut b) = ([0.0], [0.0]);
        for z in [0.1, 0.7, 1.0, 3.0] {
            w(&[z], &mut a);
            w(&[-z], &mut b);
            assert_eq!(a[0], -b[0]);
            assert!(a[0] < 0.0 && a[0].abs() <= 2.0 * (-0.5f64).exp() + 1e-15);
        }
    }

    #[test]
    fn perturbation_preset_passes() {
        let r = perturbation_convergence(&Overrides::default()).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert!(r.get("equilibrium_residual").unwrap() < 1e-6);
    }
}
