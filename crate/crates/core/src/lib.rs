//! Estimation of average treatment effects from retrospective observational
//! data whose binary exposure is differentially under-reported.
//!
//! The observed exposure indicator `Z*` may be 0 for a truly exposed unit:
//! under-reporting happens independently with probability `eta1` for units
//! with outcome `Y = 1` and `eta0` for units with `Y = 0`. This crate provides
//!
//! * the cell-probability adjustment identities linking the observed
//!   `(Y, Z*)` distribution to the true `(Y, Z)` distribution ([`cells`]),
//! * partial-identification bounds on conditional outcome probabilities and
//!   the ATE when only an upper bound `delta` on the bias is known ([`bounds`]),
//! * a joint maximum-likelihood estimator of logistic outcome/exposure models
//!   that accounts for the misreporting, plus naive IPW/OR comparators
//!   ([`estimators`]),
//! * propensity-score, prognostic-score, and blocking stratification with
//!   bias-corrected stratum tables and balance diagnostics
//!   ([`stratification`], [`matching`]),
//! * bootstrap confidence intervals and (eta0, eta1) sensitivity sweeps
//!   ([`inference`]),
//! * a synthetic-data study harness comparing the estimators under model
//!   misspecification ([`simulation`]).

pub mod bounds;
pub mod cells;
pub mod error;
pub mod estimators;
pub mod inference;
mod linalg;
pub(crate) mod logistic;
pub mod matching;
pub mod model;
pub mod simulation;
pub mod stratification;

pub use error::{Error, Result};
pub use model::{Dataset, RecallBiasSpec, Unit};
