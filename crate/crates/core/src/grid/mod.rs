//! Densities on uniform cell-centred grids and the mean-field PDE solver.

mod convolve;
mod density;
mod fp;
mod jabin_wang;
mod logdensity;
mod meanfield;

pub use convolve::{convolve_field, ConvolutionMode, ConvolutionPlan, GridField, KernelSampling};
pub use density::{invariant_gaussian, GridDensity, GridSampler, BOUNDARY_MASS_LIMIT};
pub use fp::{cfl_bound, fp_step, fp_step_in_place, sample_drift, FluxScheme, FpWorkspace, NEGATIVITY_TOLERANCE};
pub use meanfield::{run_meanfield, MeanFieldRun, MeanFieldSolver, PairForce, PdeConfig};
pub use logdensity::{evaluation_mask, interior_index, log_density_diagnostics, LogDensityDiagnostics, DENSITY_FLOOR, MASK_FRACTION};
pub use jabin_wang::{jabin_wang_phi, JabinWangReport, ScoreMode};
