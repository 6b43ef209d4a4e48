//! Bayesian comparison of two systems from repeated k-fold cross-validation.
//!
//! The pipeline runs from tagged corpora to a decision:
//!
//! 1. [`metrics`] scores predicted tags against gold tags.
//! 2. [`harness`] builds repeated k-fold split plans, runs external systems,
//!    collects a score matrix and turns it into per-dataset difference series.
//! 3. [`model`] fits the hierarchical model to those series (or the
//!    correlated t-test for a single data set).
//! 4. [`decision`] converts posterior draws and a ROPE into the
//!    probabilities that A is worse, practically equivalent, or better.
//!
//! [`io`] and [`plot`] hold the file formats used by the command-line tool.

pub mod decision;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod stats;
