use std::path::PathBuf;

use serde::Serialize;

/// A particle pair that came closer than the collision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionEvent {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub t: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("interaction kernel evaluated at the origin")]
    Singularity,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(
        "collision between particles {} and {} at distance {:e} (t = {})",
        .0.i, .0.j, .0.distance, .0.t
    )]
    Collision(CollisionEvent),

    #[error("CFL violation: dt = {dt:e} exceeds the stable bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("instability: density reached {min:e} (CFL bound was {bound:e}, dt = {dt:e})")]
    Instability { min: f64, dt: f64, bound: f64 },

    #[error("box too small: boundary cells carry {fraction:e} of the mass (limit {limit:e})")]
    BoxTooSmall { fraction: f64, limit: f64 },

    #[error("evaluation mask is empty")]
    EmptyMask,

    #[error("reference density vanishes on the support of the measure at cell {cell}")]
    SupportViolation { cell: usize },

    #[error("grid spacing {dx:e} does not resolve mollification radius {eps:e}")]
    UnderResolved { eps: f64, dx: f64 },

    #[error("integrability condition violated: {0}")]
    Integrability(String),

    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },

    #[error("unknown experiment preset `{0}`")]
    PresetNotFound(String),

    #[error("custom callable failed: {0}")]
    Callable(String),

    #[error(transparent)]
    Config(#[from] crate::io::config::ConfigError),

    #[error(transparent)]
    Checkpoint(#[from] crate::io::checkpoint::CheckpointError),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips `Context` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
