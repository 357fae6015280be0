use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("density {density} veh/m outside [0, {jam}]")]
    DensityOutOfRange { density: f64, jam: f64 },

    #[error("spacing {spacing} m below jam spacing {jam} m")]
    SubJamSpacing { spacing: f64, jam: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported model/scheme combination: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("diagram is not concave: {0}")]
    NonConcave(String),

    #[error("measurement failed: {0}")]
    Measurement(String),

    #[error("experiment invalid: {0}")]
    ExperimentInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
