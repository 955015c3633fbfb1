//! Tool-wear classification from turning-process telemetry with exact
//! Shapley explanations.
//!
//! The pipeline featurizes multi-sensor runs ([`signalprep`]), trains a
//! random forest ([`forest`]), evaluates it ([`metrics`]) and explains its
//! predictions by full coalition enumeration ([`shapley`]). [`synth`]
//! produces seeded stand-in data and [`pipeline`] wires the stages to files.

pub mod error;
pub mod forest;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod shapley;
pub mod signalprep;
pub mod synth;

pub use error::{Error, Result};
