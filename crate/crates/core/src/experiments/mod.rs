//! Scenario presets and the acceptance suite.

mod acceptance;
mod contraction;
mod gaussian;
mod params;
mod perturbation;
mod poc;
mod presets;
mod report;
mod riesz;
mod vortex;
mod wellposedness;

pub use params::{nearest, probe_grid, Overrides};
pub use report::{Comparison, Event, ExperimentReport, GridInfo, Metric, Provenance, Series, Verdict};
pub use vortex::{jabin_wang_cancellation, log_slope, vortex_entropy_decay, vortex_study, vortex_two_particle, VortexParams, VortexStudy};
pub use gaussian::{bakry_emery_gaussian, gaussian_closed_form_suite, ou_variance, ClosedFormCheck};
pub use contraction::{double_well_drift, fit_temperature, high_temperature_contraction, TemperatureFit};
pub use perturbation::{gaussian_attraction, perturbation_convergence};
pub use riesz::{riesz_convolution_bounds, scaled_profile, CASES, SCALES};
pub use wellposedness::{eps_ladder, wellposedness_monitors, LadderStats, EPS_LADDER};
pub use poc::{poc_initial, poc_scaling_report, poc_study, summarize, vortex_poc_scaling, PocParams, PocRun, PocSummary};
pub use presets::{preset_names, run_experiment, PresetFn, PRESETS};
pub use acceptance::{infrastructure_checks, run_acceptance, shared_vortex_study, CriterionOutcome, CRITERIA};
