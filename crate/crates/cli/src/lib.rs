//! Experiment harness: configuration, simulated observations, nested
//! sampling runs, reports and model comparison.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod experiment;
pub mod image_io;
pub mod report;
pub mod simulate;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::{observe, run_experiment};
pub use report::{compare_models, Comparison, MetricsReport, Verdict};
pub use simulate::simulate_observation;
