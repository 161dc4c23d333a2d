use thiserror::Error;

/// Every failure mode of the pipeline. The CLI maps `is_validation()` errors
/// to exit code 2 and everything else to exit code 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnimonError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing configuration key `{0}`")]
    MissingKey(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("could not parse `{key}`: {reason}")]
    Parse { key: String, reason: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dc-flux relation is multivalued: 2lL_l/L_J = {ratio:.6} >= 1")]
    Multivalued { ratio: f64 },
    #[error("kernel evaluated at a pole (omega = {omega:e} rad/s)")]
    Singularity { omega: f64 },
    #[error("pole expansion outside its domain: |omega/Omega_M| = {ratio:.6} >= 1")]
    Domain { ratio: f64 },
    #[error("linearized circuit unstable: {0}")]
    Instability(String),
    #[error("outside the modeled regime: {0}")]
    Regime(String),
    #[error("grid too narrow for mode {mode}: boundary amplitude {amplitude:e} (increase the phase half-width)")]
    GridTooNarrow { mode: usize, amplitude: f64 },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl UnimonError {
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            UnimonError::Config(_)
                | UnimonError::MissingKey(_)
                | UnimonError::UnknownKey(_)
                | UnimonError::Parse { .. }
                | UnimonError::Validation(_)
                | UnimonError::Multivalued { .. }
        )
    }

    /// Short stable code used in sweep rows.
    pub fn code(&self) -> &'static str {
        match self {
            UnimonError::Config(_) => "config",
            UnimonError::MissingKey(_) => "missing_key",
            UnimonError::UnknownKey(_) => "unknown_key",
            UnimonError::Parse { .. } => "parse",
            UnimonError::Validation(_) => "validation",
            UnimonError::Multivalued { .. } => "multivalued",
            UnimonError::Singularity { .. } => "singularity",
            UnimonError::Domain { .. } => "domain",
            UnimonError::Instability(_) => "instability",
            UnimonError::Regime(_) => "regime",
            UnimonError::GridTooNarrow { .. } => "grid_too_narrow",
            UnimonError::Resource(_) => "resource",
            UnimonError::Numerical(_) => "numerical",
            UnimonError::Internal(_) => "internal",
            UnimonError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for UnimonError {
    fn from(e: std::io::Error) -> Self {
        UnimonError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, UnimonError>;
