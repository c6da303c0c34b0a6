//! Configuration, file formats, experiment pipelines and run summaries for
//! the `npi` command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod output;
pub mod probes;
pub mod quantum;
pub mod summarize;

pub use error::{NpiError, Result};
