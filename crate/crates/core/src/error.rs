use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("no Bloch oscillation for zero force (infinite period)")]
    ZeroForce,

    #[error("index {index} out of range (have {available})")]
    OutOfRange { index: usize, available: usize },

    #[error("eigensolver failed at q = {q}")]
    Eigensolver { q: f64 },

    #[error("plane-wave cutoff L = {cutoff} not converged: energies moved by {change:e} E_r under L -> L+5")]
    CutoffNotConverged { cutoff: usize, change: f64 },

    #[error("quasimomentum grid incommensurate with spatial grid: {0}")]
    Incommensurate(String),

    #[error("Bloch gauge discontinuity between q = {q_left} and q = {q_right} (overlap {overlap})")]
    GaugeDiscontinuity { q_left: f64, q_right: f64, overlap: f64 },

    #[error("packet excursion {needed:.1} a does not fit in the domain (half-width {available:.1} a)")]
    DomainOverflow { needed: f64, available: f64 },

    #[error("wall reflection: probability {probability:e} within 10 a of a wall")]
    WallReflection { probability: f64 },

    #[error("time-step convergence failure: {0}")]
    Convergence(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Innermost error with all context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}
