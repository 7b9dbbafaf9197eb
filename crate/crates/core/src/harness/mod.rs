//! Configuration, builtin scenarios, runs and output emission.

pub mod config;
pub mod emit;
pub mod run;
pub mod scenarios;

pub use config::{parse_config, render_config, Format, RunConfig};
pub use run::{exit_code, run_scenario, RunOutput, RunSummary};
