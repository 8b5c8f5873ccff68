//! Interaction kernels, mollification, confinement and drift evaluation.

pub mod confinement;
pub mod convexity;
pub mod drift;
pub mod mollifier;
pub mod riesz;

pub use confinement::{ConfinementKind, ConfinementPotential};
pub use convexity::{convexity_profile, outer_dissipativity, ProfileSampling};
pub use drift::{DriftSpec, DriftVariant};
pub use mollifier::{BumpProfile, MollifiedKernel, Mollifier};
pub use riesz::{HessianCheck, RieszKernel};
