//! File formats, configuration and the experiment pipeline around
//! `carnot-core`.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod verify;

use serde::Serialize;

/// Failures of a lab run, each tied to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("diagnostic precondition violated: {0}")]
    Precondition(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Solver(_) => 3,
            LabError::Precondition(_) => 4,
            LabError::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            LabError::Config(_) => "config",
            LabError::Solver(_) => "solver",
            LabError::Precondition(_) => "precondition",
            LabError::Io(_) => "io",
        }
    }

    /// One-line JSON record for machine consumption.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            status: &'static str,
            kind: &'a str,
            exit_code: i32,
            message: String,
        }
        let rec = Record { status: "error", kind: self.kind(), exit_code: self.exit_code(), message: self.to_string() };
        serde_json::to_string(&rec).expect("record serializes")
    }
}

/// Errors building groups and grids from a configuration.
impl From<carnot_core::Error> for LabError {
    fn from(e: carnot_core::Error) -> Self {
        LabError::Config(e.to_string())
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
