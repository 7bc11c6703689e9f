//! Mining monthly call-center agent records for performance prediction.
//!
//! The pipeline: score evaluation forms and categorize them ([`scoring`]),
//! load, clean and scale agent-month records ([`dataset`]), train one-vs-rest
//! classifiers of six families ([`models`]), measure per-class accuracy
//! ([`evaluation`]) and rank inputs by the error their removal causes
//! ([`sensitivity`]). [`synth`] generates seeded data with planted effects and
//! [`pipeline`] ties everything together for the command-line tool.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod matrix;
pub mod models;
pub mod pipeline;
pub mod scoring;
pub mod sensitivity;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::FeatureMatrix;
