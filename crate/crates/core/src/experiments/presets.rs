use crate::error::{Error, Result};
use crate::experiments::params::Overrides;
use crate::experiments::report::ExperimentReport;
use crate::experiments::{
    bakry_emery_gaussian, high_temperature_contraction, jabin_wang_cancellation, perturbation_convergence, riesz_convolution_bounds,
    vortex_entropy_decay, vortex_poc_scaling, vortex_two_particle, wellposedness_monitors,
};

pub type PresetFn = fn(&Overrides) -> Result<ExperimentReport>;

pub const PRESETS: [(&str, PresetFn); 9] = [
    ("bakry_emery_gaussian", bakry_emery_gaussian),
    ("high_temperature_contraction", high_temperature_contraction),
    ("perturbation_convergence", perturbation_convergence),
    ("vortex_entropy_decay", vortex_entropy_decay),
    ("vortex_two_particle", vortex_two_particle),
    ("vortex_poc_scaling", vortex_poc_scaling),
    ("jabin_wang_cancellation", jabin_wang_cancellation),
    ("riesz_convolution_bounds", riesz_convolution_bounds),
    ("wellposedness_monitors", wellposedness_monitors),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

/// Runs a preset; the overrides are echoed into the report parameters.
pub fn run_experiment(name: &str, overrides: &Overrides) -> Result<ExperimentReport> {
    let (_, f) = PRESETS
        .iter()
        .find(|p| p.0 == name)
        .ok_or_else(|| Error::PresetNotFound(name.to_string()))?;
    let mut report = f(overrides).map_err(|e| e.context(format!("preset {name}")))?;
    report.param("overrides", overrides);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset_is_reported() {
        assert!(matches!(run_experiment("nope", &Overrides::default()), Err(Error::PresetNotFound(n)) if n == "nope"));
    }

    #[test]
    fn rerun_is_bit_identical() {
        let a = run_experiment("vortex_two_particle", &Overrides::default()).unwrap();
        let b = run_experiment("vortex_two_particle", &Overrides::default()).unwrap();
        assert_eq!(a.without_runtime(), b.without_runtime());
        assert!(a.passed());
        assert!(a.parameters.contains_key("overrides"));
    }

    #[test]
    fn errors_carry_the_preset_name() {
        let o = Overrides {
            dt: Some(-1.0),
            ..Overrides::default()
        };
        let e = run_experiment("bakry_emery_gaussian", &o).unwrap_err();
        assert!(e.to_string().contains("bakry_emery_gaussian"), "{e}");
    }
}
