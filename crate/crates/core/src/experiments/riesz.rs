use std::time::Instant;

use crate::diagnostics::{convolution_inequality_check, frozen_constant, CALIBRATION_GRID};
use crate::error::{Error, Result};
use crate::experiments::params::Overrides;
use crate::experiments::report::{Comparison, ExperimentReport, GridInfo};
use crate::grid::GridDensity;

pub const SCALES: [f64; 3] = [0.5, 1.0, 2.0];

/// `(s, p, θ)` triples checked by the preset.
pub const CASES: [(f64, f64, Option<f64>); 3] = [(0.5, f64::INFINITY, None), (0.9, f64::INFINITY, None), (0.0, f64::INFINITY, Some(0.5))];

/// Test profiles at scale `λ`: `λ² m(λx)`.
pub fn scaled_profile(name: &str, lambda: f64, n: usize, half_width: f64) -> Result<GridDensity> {
    match name {
        "gaussian" => GridDensity::gaussian(2, n, half_width, &[0.0, 0.0], 1.0 / (lambda * lambda)),
        "bimodal" => GridDensity::normalized_from_fn(2, n, half_width, |x| {
            let (a, b) = (lambda * x[0], lambda * x[1]);
            (-((a - 0.8).powi(2) / 0.5 + (b - 0.2).powi(2) / 0.3)).exp() + 0.6 * (-((a + 0.7).powi(2) + (b + 0.4).powi(2) / 0.6)).exp()
        }),
        _ => Err(Error::invalid("profile", format!("unknown profile {name}"))),
    }
}

fn case_label(s: f64, theta: Option<f64>) -> String {
    match theta {
        Some(t) => format!("log_holder{t}"),
        None => format!("s{s}"),
    }
}

/// Scale invariance of `LHS/RHS` and the frozen-constant bound, per case
/// and profile.
pub fn riesz_convolution_bounds(o: &Overrides) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (n, half_width) = (o.grid_n_or(CALIBRATION_GRID.0), o.half_width_or(CALIBRATION_GRID.1));
    let mut r = ExperimentReport::new("riesz_convolution_bounds", o.seed_or(0));
    r.param("grid_n", n).param("half_width", half_width).param("scales", SCALES).param(
        "cases",
        CASES.iter().map(|c| (c.0, "inf", c.2)).collect::<Vec<_>>(),
    );
    for profile in ["gaussian", "bimodal"] {
        let densities = SCALES
            .iter()
            .map(|&l| scaled_profile(profile, l, n, half_width))
            .collect::<Result<Vec<_>>>()?;
        for (s, p, theta) in CASES {
            let label = format!("{profile}_{}", case_label(s, theta));
            let ratios = densities
                .iter()
                .map(|m| Ok(convolution_inequality_check(m, s, p, theta)?.ratio()))
                .collect::<Result<Vec<f64>>>()?;
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |a, v| (a.0.min(*v), a.1.max(*v)));
            let constant = frozen_constant(s, p, theta).ok_or_else(|| Error::invalid("s", "no frozen constant"))?;
            r.series(&format!("{label}_ratio"), SCALES.to_vec(), ratios, false, None)
                .scalar(&format!("{label}_constant"), constant);
            r.verdict(&format!("{label}_scale_invariance"), &format!("{label}_spread"), hi / lo - 1.0, Comparison::AtMost, 0.02);
            r.verdict(&format!("{label}_bounded"), &format!("{label}_max_ratio"), hi, Comparison::AtMost, constant);
        }
    }
    r.provenance.grid = Some(GridInfo { dim: 2, n, half_width });
    r.provenance.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_scale_mass_preserving() {
        for name in ["gaussian", "bimodal"] {
            let a = scaled_profile(name, 1.0, 256, 8.0).unwrap();
            let b = scaled_profile(name, 2.0, 256, 8.0).unwrap();
            assert!((a.mass() - 1.0).abs() < 1e-12 && (b.mass() - 1.0).abs() < 1e-12);
            assert!((b.max_value() / a.max_value() - 4.0).abs() < 0.05);
        }
        assert!(scaled_profile("ring", 1.0, 16, 1.0).is_err());
    }
}
