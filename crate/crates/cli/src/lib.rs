//! Experiment runner for the consensus-aware multi-agent protocol: configs,
//! datasets, batch execution and report tables.

pub mod config;
pub mod dataset;
pub mod hook;
pub mod math;
pub mod report;
pub mod runner;

pub use config::{BackendSpec, ConfigError, ExperimentConfig, HttpOptions};
pub use dataset::{load_dataset, parse_dataset, SchemaError};
pub use hook::CommandTester;
pub use report::{build_report, emit_report, read_results, Report, ReportError, ResultLine};
pub use runner::{recompute_summary, run_experiment, summarize_lines, RunMetrics, RunOutcome, RunSummary};
