//! Experiment harness: run configuration, training loops for every variant,
//! greedy evaluation on common seeds, trace capture, step-time benchmarks
//! and the `echelon` command line.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod metrics;
pub mod policy;
pub mod train;

pub use config::{Override, RunConfig};
pub use error::RunError;
pub use metrics::{summarize, MetricsRow};
pub use policy::{eval_seeds, evaluate, trace, EvalSummary, TrainedPolicy};
pub use train::{train, ExperimentSpec, TrainOutcome};
