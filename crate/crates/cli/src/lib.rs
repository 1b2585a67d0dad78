//! Configuration-driven front end for the gasket spectral library.
//!
//! `run` validates an [`ExperimentConfig`], executes one command and writes
//! its artifacts atomically into the output directory. Exit status: 0 on
//! success, 2 for an invalid configuration, 3 for a numerical failure.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod spec;

use std::path::PathBuf;

use serde_json::{json, Value};

pub use config::{validate, CommandKind, ExperimentConfig, ModeKind, Violation};
pub use output::Artifact;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("numerical failure: {0}")]
    Numerical(#[from] gasket_core::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub(crate) fn invalid_field(field: &str) -> impl Fn(String) -> CliError + '_ {
        move |message| {
            CliError::Invalid(vec![Violation {
                field: field.to_string(),
                message,
            }])
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Machine-readable error record.
    pub fn to_json(&self) -> Value {
        match self {
            CliError::Invalid(v) => json!({
                "status": "invalid_config",
                "exit_code": 2,
                "violations": v,
            }),
            CliError::Numerical(e) => json!({
                "status": "numerical_failure",
                "exit_code": 3,
                "error": e.to_string(),
            }),
            CliError::Io(e) => json!({
                "status": "io_failure",
                "exit_code": 1,
                "error": e.to_string(),
            }),
        }
    }
}

/// Validates and executes without writing anything.
pub fn execute(config: &ExperimentConfig) -> Result<commands::CommandOutput, CliError> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    match config.command.expect("validated") {
        CommandKind::Topology => commands::topology(config),
        CommandKind::Spectrum => commands::spectrum(config),
        CommandKind::Basis => commands::basis(config),
        CommandKind::Szego => commands::szego(config),
        CommandKind::Equidist => commands::equidist(config),
        CommandKind::Resistance => commands::resistance(config),
    }
}

/// Executes and writes `<output_dir>/*` plus `summary.json`.
pub fn run(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    let result = execute(config)?;
    let mut artifacts = result.artifacts;
    artifacts.push(Artifact::json("summary.json", &result.summary));
    Ok(output::write_artifacts(
        &config.output_dir,
        &artifacts,
        &config.hash(),
        config.seed,
    )?)
}
