//! Particle systems and generic diffusions: stepping, couplings, monitors.

pub mod coupling;
pub mod dominating;
pub mod ensemble;
pub mod fit;
pub mod monitors;
pub mod rng;
pub mod step;

pub use coupling::{step_coupled, CoupledPair, CoupledStepReport, Coupling, SynchronousGap};
pub use dominating::{dominating_radius, SurvivalCurve};
pub use ensemble::ParticleEnsemble;
pub use fit::{contraction_fit, contraction_fit_log, ContractionFit};
pub use monitors::{energy_functional, ensemble_monitors, pair_energy, EnsembleMonitors};
pub use step::{run_particles, step_particles, Scheme, SdeConfig, StepReport};
