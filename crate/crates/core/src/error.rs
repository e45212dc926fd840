use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("terminal index {index} out of range (network has {terminals} terminals)")]
    IndexOutOfRange { index: usize, terminals: usize },

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("quadrature did not converge: change {change:.3e} between orders {lower} and {upper}")]
    QuadratureNonConvergence {
        lower: usize,
        upper: usize,
        change: f64,
    },

    #[error("fixed-point iteration did not converge in {iterations} iterations (best residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("no branch converged (best residual {best_residual:.3e})")]
    NoConvergedBranch { best_residual: f64 },

    #[error("invalid detector: {0}")]
    InvalidDetector(String),

    #[error("zero-forcing limit is degenerate: {0}")]
    ZeroForcingDegenerate(String),

    #[error("unsupported prior: {0}")]
    UnsupportedPrior(String),

    #[error("exhaustive enumeration needs {terms} terms, above the limit of {limit}")]
    EnumerationLimit { terms: u128, limit: u128 },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
