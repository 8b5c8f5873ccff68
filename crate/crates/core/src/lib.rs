//! Simulation and verification toolkit for McKean–Vlasov diffusions,
//! interacting particle systems with logarithmic or Riesz interactions,
//! and the functional inequalities that control them.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod numerics;
pub mod sde;

pub use error::{CollisionEvent, Error, Result};
