//! Design and analysis of two-arm randomized trials around semiparametric
//! efficient (cross-fit AIPW) estimation.
//!
//! The crate is organized along the workflow:
//!
//! - [`math`]: normal distribution helpers, effect functions, the efficiency
//!   bound for the asymptotic variance, the power formula and the sample-size
//!   solver.
//! - [`learners`]: from-scratch regression learners (OLS, kNN, gradient
//!   boosted trees, CV-selected ensembles) and cross-validated error estimates.
//! - [`estimators`]: unadjusted, ANCOVA (HC0) and cross-fit AIPW analysis of a
//!   trial dataset.
//! - [`design`]: estimating population parameters from historical control
//!   data and planning the enrollment target.
//! - [`simulation`]: counterfactual data-generating scenarios and the Monte
//!   Carlo replication engine.
//! - [`io`]: CSV schemas for historical and trial files.

pub mod design;
pub mod error;
pub mod estimators;
pub mod io;
pub mod learners;
pub mod math;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};

/// Version tag written into every JSON document this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
