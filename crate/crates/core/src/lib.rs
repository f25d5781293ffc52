//! Bidirectional deep-readout echo state networks (BDESN) for multivariate
//! time-series classification.
//!
//! The pipeline runs each series forwards and backwards through one fixed
//! random reservoir, concatenates the two final states, compresses them with
//! PCA, and classifies the result with a dropout-regularized MLP. A classic
//! echo state network (unidirectional final state plus ridge readout) is
//! provided as the baseline, together with data loading, synthetic tasks,
//! random hyperparameter search and a benchmark harness.

pub mod data_io;
pub mod dimred;
pub mod error;
pub mod experiments;
pub mod pipeline;
pub mod readout;
pub mod reservoir;
pub mod tensor_math;

pub use error::{Error, Result};
