//! Configuration, orchestration and report emission.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, render, ExperimentConfig};
pub use report::{emit_report, CsvTable, RunReport};
pub use run::{exit_code, run_experiment, Command};
