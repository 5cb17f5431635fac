//! Error type shared across the crate.

use std::fmt;

/// Errors produced by construction and inference operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Design construction rejected: pooled size below 4 (an empty quartile
    /// cell) or treated count outside `1..=N-1`.
    InvalidDesign(String),
    /// Cell counts violate the fixed margins of the design.
    InvalidCounts(String),
    /// Weight vector violates the admissibility constraints
    /// `0 = w1 <= w2 < w3 <= w4`.
    InvalidWeights(String),
    /// Sample data rejected: empty group, non-finite value, or pooled size
    /// below 4.
    InvalidSample(String),
    /// Confidence level / tail probability outside `(0, 1)`.
    InvalidLevel(f64),
    /// Argument outside the operation's domain.
    InvalidArgument(String),
    /// Exact enumeration would exceed the configured budget; callers should
    /// fall back to the large-sample approximations.
    BudgetExceeded { required: u128, budget: u64 },
    /// The objective attains its minimum only on an unbounded segment, so no
    /// midpoint estimate exists.
    UnboundedMinimizer,
    /// A matrix block that should be invertible was numerically singular,
    /// which indicates invalid input.
    SingularMatrix,
    /// Adaptive quadrature failed to reach the requested tolerance.
    QuadratureFailed(String),
    /// Internal invariant violated; indicates a bug rather than bad input.
    Internal(String),
}

impl Error {
    /// True for the enumeration-budget refusal, which callers may recover
    /// from by switching to asymptotic mode.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }

    /// True for errors caused by invalid user input.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidDesign(_)
                | Error::InvalidCounts(_)
                | Error::InvalidWeights(_)
                | Error::InvalidSample(_)
                | Error::InvalidLevel(_)
                | Error::InvalidArgument(_)
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDesign(msg) => write!(f, "invalid design: {msg}"),
            Error::InvalidCounts(msg) => write!(f, "invalid cell counts: {msg}"),
            Error::InvalidWeights(msg) => write!(f, "invalid weights: {msg}"),
            Error::InvalidSample(msg) => write!(f, "invalid sample: {msg}"),
            Error::InvalidLevel(alpha) => {
                write!(f, "level parameter {alpha} outside the open interval (0, 1)")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::BudgetExceeded { required, budget } => write!(
                f,
                "exact enumeration needs {required} states, over the budget of {budget}; \
                 use asymptotic mode"
            ),
            Error::UnboundedMinimizer => write!(
                f,
                "objective is minimized only on an unbounded shift segment; no midpoint exists"
            ),
            Error::SingularMatrix => write!(f, "covariance block is numerically singular"),
            Error::QuadratureFailed(msg) => write!(f, "quadrature failed: {msg}"),
            Error::Internal(msg) => write!(f, "internal invariant violated: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
