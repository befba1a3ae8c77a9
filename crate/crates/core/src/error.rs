use thiserror::Error;

/// Errors raised by mesh construction, assembly, solves and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate mesh: cell {cell} has measure {measure:e}")]
    DegenerateMesh { cell: usize, measure: f64 },

    #[error("invalid coefficient: boundary coefficient {value} at facet {facet} is negative or not finite")]
    InvalidCoefficient { facet: usize, value: f64 },

    #[error("singular system: lambda = 0 with a vanishing boundary coefficient leaves constants in the kernel")]
    SingularSystem,

    #[error("numeric breakdown in iteration {iteration}: {what}")]
    NumericBreakdown { iteration: usize, what: &'static str },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unsupported dimension d = {0}: the embedding exponents need d >= 3")]
    UnsupportedDimension(usize),

    #[error("no informative pairs: every stability ratio is undefined")]
    NoInformativePairs,

    #[error("solve {index} failed: {source}")]
    SolveFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
