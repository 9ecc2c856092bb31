//! Experiment runner for the `codeword` simulator.
//!
//! Each subcommand builds a [`Report`]: a list of named checks with a
//! residual, a tolerance and a status, plus per-trial fidelity statistics.
//! Reports render as an aligned table or as deterministic JSON.

pub mod config;
pub mod event;
pub mod report;
pub mod suites;

pub use config::{code_source, CodeSource, Command, ExperimentConfig, Format};
pub use event::ErrorSpec;
pub use report::{Check, Report, Status, Verdict};
pub use suites::{cmd_constraints, cmd_export_spec, cmd_recover, cmd_verify, run};
