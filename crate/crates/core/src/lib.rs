//! Two-sample shift inference from pooled-quartile 4x2 tables.
//!
//! Pooling the control sample with a shifted treated sample and cutting the
//! pooled order statistics at the quartiles yields a 4x2 contingency table
//! whose treated-count vector is multivariate hypergeometric under the shift
//! hypothesis. This crate builds everything on top of that table:
//!
//! * [`hypergeom`] — the exact table law: pmf, moments, the zero-first-row
//!   generalized inverse of the singular covariance, full-support enumeration.
//! * [`table`] — classifying data into tables for any hypothesized shift, and
//!   the piecewise-constant trajectory of tables over all shifts.
//! * [`rank`] — fixed-score group-rank inference: the statistic `T = w'A`,
//!   exact and large-sample tests, the Hodges-Lehmann estimate, confidence
//!   intervals by test inversion.
//! * [`gmm`] — generalized-method-of-moments inference: the `G²` minimizer,
//!   the overidentification test, difference tests, and confidence sets that
//!   need not be intervals.
//! * [`attributable`] — shift-free inference: the exact Mann-Whitney null law
//!   and attributable-effect lower bounds.
//! * [`scores`] — the limiting score calculus: band integrals of `-f'/f`,
//!   the limiting covariance, optimal group scores, relative efficiencies.
//!
//! All values are immutable after construction and every operation is a pure
//! function, so everything here is safe to share across threads.

pub mod attributable;
pub mod error;
pub mod gmm;
pub mod hypergeom;
pub mod rank;
pub mod scores;
pub mod special;
pub mod table;

pub use error::Error;
pub use hypergeom::{CellCounts, HypergeomModel, QuartileDesign};
pub use rank::{
    ConfidenceSet, EstimateResult, EstimateRule, Interval, TestMode, TestResult, WeightPreset,
    WeightVector,
};
pub use table::{ShiftTrajectory, TwoSample};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
