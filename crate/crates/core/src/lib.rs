//! Next-basket recommendation with mixed models of user preferences, item
//! popularities and item-to-item transitions.
//!
//! * [`dataset`]: ingest logs, build basket sequences, filter and split.
//! * [`model`]: the mixed-model family, its gradients and Adagrad training.
//! * [`baselines`]: global and per-user popularity rankers.
//! * [`evaluation`]: ranking metrics, the multi-horizon protocol and analyses.
//! * [`synthetic`]: planted-structure corpora for testing.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod ranking;
pub mod synthetic;

pub use error::{Error, Result};
