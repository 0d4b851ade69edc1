//! VES/CES production-function toolkit: closed-form evaluation and factor
//! prices, Taylor linearization with parameter recovery, a least-squares
//! engine with the full model-selection statistics battery, per-industry
//! estimation pipelines, and CSV ingestion plus a synthetic-data generator.
//!
//! All computations are pure functions of their inputs; given the same
//! configuration and seed, every result is byte-for-byte reproducible.

pub mod data_io;
pub mod error;
pub mod linearization;
pub mod pipeline;
pub mod production;
pub mod regression;
pub mod report;

pub use error::{Error, Result};
pub use report::ExclusionReport;
