//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide error enumeration.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A site value left the finite positive range during integration.
    /// Carries enough context to locate the failure in a long run.
    #[error("numerical blowup at site {site} (micro time {tau:.6}): value {value}")]
    NumericalBlowup { site: i64, tau: f64, value: f64 },

    /// A model or integrator parameter violated its domain.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// An experiment configuration field failed validation.
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    /// An observer or analysis asked for an accumulator that was not recorded.
    #[error("missing accumulator `{name}`")]
    MissingAccumulator { name: String },

    /// Checkpoint serialization/restore failure.
    #[error("checkpoint error: {message}")]
    Checkpoint { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
