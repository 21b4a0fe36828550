//! Command-line front end for srpctl: scenario files with strict keys,
//! command dispatch, and CSV/JSON series output for external plotting.

pub mod commands;
pub mod scenario;
pub mod series;

use std::path::PathBuf;

use serde_json::{json, Value};
use srpctl_core::simulation::SimulationError;
use thiserror::Error;

pub use commands::dispatch;
pub use scenario::load_scenario;
pub use series::{render, write_series, Table, TRAJECTORY_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Ranks of the controllability and observability matrices, open-loop spectrum.
    Analyze,
    /// LQR, observer and H∞ gains with closed-loop spectra.
    Synthesize,
    /// Lambert departure and arrival velocities for the scenario transfer.
    Lambert,
    /// Closed-loop simulation of the scenario's method.
    Simulate,
    /// All four methods side by side.
    Compare,
    /// Deviation caused by SRP alone over the scenario horizon.
    Drift,
    /// Step and frequency response of the scenario's loop.
    Response,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Defaults are used when absent.
    pub scenario_path: Option<PathBuf>,
    /// Files are only written when set.
    pub output_dir: Option<PathBuf>,
    pub format: Format,
    /// `key=value`, applied in order onto the scenario.
    pub overrides: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid scenario, unwritable output.
    #[error("{0}")]
    Input(String),
    /// Synthesis, integration or other numerical failure.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Numerical(_) => "numerical",
        }
    }

    /// Single-line JSON diagnostic for the error stream.
    pub fn diagnostic(&self) -> String {
        json!({"level": "error", "kind": self.kind(), "exit_code": self.exit_code(), "message": self.to_string()})
            .to_string()
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::InvalidScenario(_) => CliError::Input(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// What a command produced: the summary printed on stdout and the files
/// written under the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
}
