use thiserror::Error;

/// Errors raised by the inference engines and the batch front end.
#[derive(Debug, Error)]
pub enum IoiError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value violates a structural invariant (malformed density, mismatched lengths, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// The justifying analogy for a method was declared unacceptable, so the method is blocked.
    #[error("analogy rejected: {0}")]
    AnalogyRejected(String),

    /// Every posterior weight underflowed in a grid update.
    #[error("degenerate update: largest unnormalized log-weight {max_log_weight} is below {threshold}")]
    DegenerateUpdate { max_log_weight: f64, threshold: f64 },

    /// A region carries too little mass to condition on.
    #[error("empty region ({lo}, {hi}]: mass {mass:e} below {threshold:e}")]
    EmptyRegion {
        lo: f64,
        hi: f64,
        mass: f64,
        threshold: f64,
    },

    /// A conditional kernel vanishes on a full grid line, so the density ratio is undefined.
    #[error("undefined ratio: kernel {kernel} is zero on the whole grid line {line}")]
    UndefinedRatio { kernel: usize, line: usize },

    /// A Gibbs chain hit an invalid kernel evaluation.
    #[error("chain aborted at iteration {iteration}: {reason}")]
    ChainAborted { iteration: usize, reason: String },

    /// Configuration or input data failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// A CSV cell could not be parsed.
    #[error("parse error at data row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IoiError {
    /// Short machine-readable tag used in structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            IoiError::Domain(_) => "domain",
            IoiError::Structural(_) => "structural",
            IoiError::AnalogyRejected(_) => "analogy_rejected",
            IoiError::DegenerateUpdate { .. } => "degenerate_update",
            IoiError::EmptyRegion { .. } => "empty_region",
            IoiError::UndefinedRatio { .. } => "undefined_ratio",
            IoiError::ChainAborted { .. } => "chain_aborted",
            IoiError::Validation(_) => "validation",
            IoiError::Parse { .. } => "parse",
            IoiError::Io { .. } => "io",
        }
    }

    /// Process exit code for the CLI: 2 analogy rejected, 3 validation, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoiError::AnalogyRejected(_) => 2,
            IoiError::Domain(_)
            | IoiError::Structural(_)
            | IoiError::Validation(_)
            | IoiError::Parse { .. }
            | IoiError::Io { .. } => 3,
            IoiError::DegenerateUpdate { .. }
            | IoiError::EmptyRegion { .. }
            | IoiError::UndefinedRatio { .. }
            | IoiError::ChainAborted { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, IoiError>;
