use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inconsistent or out-of-range inputs (site indices, ansatz specs, dimensions).
    #[error("configuration error: {0}")]
    Config(String),

    /// A dense object would exceed the configured size cap.
    #[error("resource error: {0}")]
    Resource(String),

    /// An input violated a documented precondition (non-Hermitian, unnormalized, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Two coupled levels are closer than the gap tolerance.
    #[error("near-degenerate levels {lower} and {upper} (gap {gap:e} <= tolerance {tolerance:e})")]
    Degeneracy {
        lower: usize,
        upper: usize,
        gap: f64,
        tolerance: f64,
    },

    /// Gauge tracking lost the level (vanishing overlap with the previous state).
    #[error("tracking error: {0}")]
    Tracking(String),

    /// Least-squares system has no retained directions but a nonzero target.
    #[error("rank-deficient normal system: {0}")]
    RankDeficient(String),

    /// Time or parameter outside the protocol domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The protocol never reaches the requested field value.
    #[error("protocol never crosses B = {target}")]
    NoCrossing { target: f64 },

    /// Step halving did not settle the final fidelity.
    #[error("propagation did not converge: |dF| = {delta:e} after {refinements} refinements (tolerance {tolerance:e})")]
    Convergence {
        delta: f64,
        refinements: usize,
        tolerance: f64,
    },

    /// The dense eigensolver reported a failure.
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    /// Integer result does not fit the output type.
    #[error("integer overflow: {0}")]
    Overflow(String),
}

impl Error {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Resource(_) | Error::Domain(_) | Error::Overflow(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Resource(_) => "resource",
            Error::Contract(_) => "contract",
            Error::Degeneracy { .. } => "degeneracy",
            Error::Tracking(_) => "tracking",
            Error::RankDeficient(_) => "rank_deficient",
            Error::Domain(_) => "domain",
            Error::NoCrossing { .. } => "no_crossing",
            Error::Convergence { .. } => "convergence",
            Error::Eigensolver(_) => "eigensolver",
            Error::Overflow(_) => "overflow",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
