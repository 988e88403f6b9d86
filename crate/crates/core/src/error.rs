//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    // ---- data model ----
    #[error("unit {index} has covariate dimension {found}, expected {expected}")]
    CovariateDimension {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("{field} must be 0 or 1 at unit {index}")]
    NonBinary { field: &'static str, index: usize },
    #[error("unit {index} reports exposure (z* = 1) but true z = 0; only under-reporting is modeled")]
    ExposureDirection { index: usize },
    #[error("eta must lie in [0, 1), got {value}")]
    InvalidEta { value: f64 },
    #[error("per-unit eta vector has length {found}, dataset has {expected} units")]
    EtaLength { expected: usize, found: usize },
    #[error("this operation requires a constant (eta0, eta1) specification")]
    ConstantEtaRequired,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("covariate index {index} out of range for dimension {dim}")]
    CovariateIndex { index: usize, dim: usize },

    // ---- cell algebra ----
    #[error("cell probabilities must form a simplex within 1e-9: sum = {sum}, min = {min}")]
    InvalidSimplex { sum: f64, min: f64 },
    #[error("adjusted cell {cell} = {value:.6e} is negative; (eta0, eta1) are incompatible with the observed table")]
    InadmissibleEtas { cell: &'static str, value: f64 },
    #[error("adjusted exposure margin for z = {arm} is not positive; conditional contrast undefined")]
    DegenerateMargin { arm: u8 },

    // ---- bounds ----
    #[error("bound denominator non-positive at delta = {delta}; largest admissible delta for this table is {max_delta:.6}")]
    DegenerateBound { delta: f64, max_delta: f64 },

    // ---- estimators ----
    #[error("fitted propensity {value:.3e} at unit {index} violates positivity")]
    PositivityViolation { index: usize, value: f64 },
    #[error("prognostic fit needs at least {needed} exposed units with varying outcome, found {found}")]
    InsufficientExposed { needed: usize, found: usize },

    // ---- stratification ----
    #[error("scores have only {distinct} distinct values, need at least {needed} to form strata")]
    DegenerateScores { distinct: usize, needed: usize },
    #[error("stratum {index} is degenerate ({reason}) and no merge target is available")]
    DegenerateStratum { index: usize, reason: &'static str },
    #[error("all strata are degenerate under the working specification")]
    AllDegenerate,
    #[error("N = {n} is not divisible by block size k = {k}")]
    NonDivisibleN { n: usize, k: usize },

    // ---- matching ----
    #[error("assignment instance infeasible: {rows} rows, total column capacity {capacity}")]
    InfeasibleInstance { rows: usize, capacity: usize },
    #[error("cost matrix entry ({row}, {col}) is not a finite non-negative number")]
    InvalidCost { row: usize, col: usize },

    // ---- inference ----
    #[error("{failed} of {total} bootstrap replicates failed (limit 10%); last failure: {last}")]
    ReplicateFailure {
        failed: usize,
        total: usize,
        last: String,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
