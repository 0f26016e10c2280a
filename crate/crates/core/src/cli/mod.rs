//! Experiment drivers behind the command-line interface: configuration
//! parsing, the tomography / ratio-curve / QFI pipelines, deterministic CSV
//! and JSON output, and the validation suite.

pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;

pub use config::{ExperimentConfig, ExperimentKind, Observable, StateSpec, TimeGrid};
pub use experiments::{run_qfi, run_ratio_curves, run_tomography, RunOptions};
pub use validate::{run_validate, ValidationReport};
