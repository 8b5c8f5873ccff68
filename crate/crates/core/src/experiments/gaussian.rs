use std::time::Instant;

use crate::diagnostics::{
    bakry_emery_constant, fisher_information, gaussian_lsi_constant, lsi_scan, poincare_scan, relative_entropy, TestFunctionFamily,
};
use crate::error::Result;
use crate::experiments::params::Overrides;
use crate::experiments::report::{Comparison, ExperimentReport, GridInfo};
use crate::grid::{GridDensity, MeanFieldSolver, PdeConfig};
use crate::kernels::ConfinementPotential;

fn lattice(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

/// Variance at time `t` of `dX = −κX dt + √2σ dW` started with variance `v0`.
pub fn ou_variance(kappa: f64, sigma: f64, v0: f64, t: f64) -> f64 {
    let e = (-2.0 * kappa * t).exp();
    e * v0 + sigma * sigma * (1.0 - e) / kappa
}

/// Linear flow `b = −κx` from a centred Gaussian: the formula for `C_t`
/// against the exact Gaussian constant on a `(v₀, t)` lattice, and an LSI
/// scan along the grid flow.
pub fn bakry_emery_gaussian(o: &Overrides) -> Result<ExperimentReport> {
    let start = Instant::now();
    let kappa = o.kappa_or(1.0);
    let sigma = o.sigma_or(1.0);
    let n = o.grid_n_or(512);
    let half_width = o.half_width_or(10.0);
    let dt = o.dt_or(2.5e-4);
    let t_end = o.t_end_or(2.0);
    let v0 = 3.0;

    let mut formula_gap: f64 = 0.0;
    for &v in &lattice(0.1, 5.0, 10) {
        for &t in &lattice(0.0, 3.0, 10) {
            let exact = gaussian_lsi_constant(ou_variance(kappa, sigma, v, t));
            let c = bakry_emery_constant(-kappa, gaussian_lsi_constant(v), sigma, t);
            formula_gap = formula_gap.max((c - exact).abs());
        }
    }

    let probes: Vec<f64> = [0.0, 0.25, 0.5, 1.0, 2.0].into_iter().filter(|t| *t <= t_end + 1e-12).collect();
    let config = PdeConfig {
        dt,
        t_end,
        sigma,
        ..PdeConfig::default()
    };
    let confinement = ConfinementPotential::quadratic(kappa);
    let mut solver = MeanFieldSolver::linear(1, n, half_width, &confinement, &config)?;
    let m0 = GridDensity::gaussian(1, n, half_width, &[0.0], v0)?;
    let family = TestFunctionFamily::ExponentialTilts {
        lambdas: vec![0.25, 0.5, 1.0, 2.0],
    };
    let run = solver.run(&m0, &config, &probes, |m| Ok(lsi_scan(m, &family)?.value))?;
    let times: Vec<f64> = run.probes.iter().map(|p| p.0).collect();
    let scans: Vec<f64> = run.probes.iter().map(|p| p.1).collect();
    let bounds: Vec<f64> = times
        .iter()
        .map(|&t| bakry_emery_constant(-kappa, gaussian_lsi_constant(v0), sigma, t))
        .collect();
    let scan_gap = scans.iter().zip(&bounds).map(|(s, b)| (s - b).abs()).fold(0.0, f64::max);
    let overshoot = scans.iter().zip(&bounds).map(|(s, b)| s - b).fold(f64::NEG_INFINITY, f64::max);

    let mut r = ExperimentReport::new("bakry_emery_gaussian", o.seed_or(0));
    r.param("kappa", kappa)
        .param("sigma", sigma)
        .param("grid_n", n)
        .param("half_width", half_width)
        .param("dt", dt)
        .param("t_end", t_end)
        .param("v0", v0)
        .param("lattice_v0", [0.1, 5.0])
        .param("lattice_t", [0.0, 3.0])
        .param("lattice_points", 10);
    r.series("bakry_emery_constant", times.clone(), bounds, false, None)
        .series("lsi_scan", times, scans, false, None)
        .scalar("max_mass_drift", run.max_mass_drift);
    r.verdict("formula_exact", "max_formula_error", formula_gap, Comparison::AtMost, 1e-12);
    r.verdict("scan_matches_bound", "max_scan_gap", scan_gap, Comparison::AtMost, 1e-3);
    r.verdict("scan_is_lower_bound", "max_scan_overshoot", overshoot, Comparison::AtMost, 1e-3);
    r.provenance.grid = Some(GridInfo { dim: 1, n, half_width });
    r.provenance.dt = Some(dt);
    r.provenance.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

/// One closed-form comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormCheck {
    pub name: &'static str,
    pub observed: f64,
    pub exact: f64,
    pub tolerance: f64,
}

impl ClosedFormCheck {
    pub fn error(&self) -> f64 {
        (self.observed - self.exact).abs()
    }

    pub fn passed(&self) -> bool {
        self.error() <= self.tolerance
    }
}

/// Grid estimators on Gaussians with known relative entropy, Fisher
/// information, log-Sobolev and Poincaré constants.
pub fn gaussian_closed_form_suite() -> Result<Vec<ClosedFormCheck>> {
    let g1 = |mean: f64, v: f64| GridDensity::gaussian(1, 512, 10.0, &[mean], v);
    let std1 = g1(0.0, 1.0)?;
    let mut out = vec![
        ClosedFormCheck {
            name: "kl_shift",
            observed: relative_entropy(&g1(1.0, 1.0)?, &std1)?,
            exact: 0.5,
            tolerance: 1e-4,
        },
        ClosedFormCheck {
            name: "kl_variance",
            observed: relative_entropy(&g1(0.0, 2.0)?, &std1)?,
            exact: (2.0 - 1.0 - 2f64.ln()) / 2.0,
            tolerance: 1e-4,
        },
        ClosedFormCheck {
            name: "fisher_shift",
            observed: fisher_information(&g1(1.0, 1.0)?, &std1)?,
            exact: 1.0,
            tolerance: 1e-3,
        },
        ClosedFormCheck {
            name: "fisher_variance",
            // ∫|x/v − x|² dN(0,v) = (1 − v)²/v
            observed: fisher_information(&g1(0.0, 2.0)?, &std1)?,
            exact: 0.5,
            tolerance: 1e-3,
        },
    ];
    let tilts = TestFunctionFamily::ExponentialTilts {
        lambdas: vec![0.5, 1.0, 2.0],
    };
    let hermite = TestFunctionFamily::Hermite { k_max: 4 };
    for v in [0.5, 1.0, 2.0] {
        let mu = g1(0.0, v)?;
        out.push(ClosedFormCheck {
            name: "lsi_scan_1d",
            observed: lsi_scan(&mu, &tilts)?.value,
            exact: v / 2.0,
            tolerance: 1e-3,
        });
        out.push(ClosedFormCheck {
            name: "poincare_scan_1d",
            observed: poincare_scan(&mu, &hermite)?.value,
            exact: v,
            tolerance: 1e-3,
        });
    }
    let mu2 = GridDensity::gaussian(2, 128, 8.0, &[0.0, 0.0], 1.5)?;
    let nu2 = GridDensity::gaussian(2, 128, 8.0, &[0.6, -0.3], 1.5)?;
    out.push(ClosedFormCheck {
        name: "kl_shift_2d",
        observed: relative_entropy(&nu2, &mu2)?,
        exact: (0.36 + 0.09) / (2.0 * 1.5),
        tolerance: 1e-4,
    });
    out.push(ClosedFormCheck {
        name: "lsi_scan_2d",
        observed: lsi_scan(&mu2, &tilts)?.value,
        exact: 0.75,
        tolerance: 1e-3,
    });
    out.push(ClosedFormCheck {
        name: "poincare_scan_2d",
        observed: poincare_scan(&mu2, &hermite)?.value,
        exact: 1.5,
        tolerance: 1e-3,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_variance_solves_the_moment_ode() {
        let (k, s, v0) = (1.3, 0.7, 2.5);
        let h = 1e-5;
        for t in [0.1, 0.5, 2.0] {
            let dv = (ou_variance(k, s, v0, t + h) - ou_variance(k, s, v0, t - h)) / (2.0 * h);
            assert!((dv - (-2.0 * k * ou_variance(k, s, v0, t) + 2.0 * s * s)).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_suite_passes() {
        for c in gaussian_closed_form_suite().unwrap() {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn bakry_emery_preset_passes() {
        let r = bakry_emery_gaussian(&Overrides::default()).unwrap();
        assert!(r.passed(), "{}", r.to_json());
    }
}
