//! Library side of the `kdv` binary: configuration parsing and the
//! `run`, `study` and `invariants` commands.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_invariants, cmd_run, cmd_study, CliError, RunSummary};
pub use config::{env_name, parse_config, parse_config_with_env, ConfigErrors, ConfigIssue, RunConfig, StudyKeys};
