//! Information functionals, inequality-constant estimators and chaos metrics.

mod chaos;
mod constants;
mod entropy;
mod perturbation;
mod riesz_bounds;
mod scans;

pub use constants::{bakry_emery_constant, gaussian_lsi_constant, high_temp_threshold, llf_condition};
pub use entropy::{fisher_information, relative_entropy};
pub use scans::{lsi_scan, poincare_scan, ScanResult, TestFn, TestFunctionFamily};
pub use chaos::{kde_on_grid, marginal_kl, marginal_kl_pooled, nearest_neighbor_distances, ChaosEstimate, KlEstimator, BOOTSTRAP_RESAMPLES, MIN_SAMPLES};
pub use perturbation::{perturbation_potential, PerturbationNorms};
pub use riesz_bounds::{
    calibrate_convolution_constant, convolution_inequality_check, frozen_constant, ConvolutionBoundReport, CALIBRATION_GRID,
    CALIBRATION_MARGIN, CALIBRATION_VARIANCES, FROZEN_CONSTANTS,
};
