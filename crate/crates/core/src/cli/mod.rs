//! Scenario files, the refinement driver and report emission behind the
//! `divform` binary.

mod report;
mod run;
mod scenario;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use report::{check_json, eigen_csv, report_json, to_json_string, write_file, write_matrices};
pub use run::{run, CheckOutcome, LevelReport, LevelTiming, RunOptions, RunReport, Verdict};
pub use scenario::{
    parse_scenario, CheckRequest, EigenSettings, OutputPaths, Scenario, DEFAULT_RESOLUTION,
};

/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {reason}")]
pub struct ConfigError {
    /// Dotted key path, such as `checks[0].B0`.
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Io { .. } => 2,
        }
    }
}

/// Writes the report, CSV and returns the JSON text.
pub fn emit(report: &RunReport, csv: Option<&Path>) -> Result<String, RunError> {
    let text = to_json_string(&report_json(report));
    if let Some(p) = &report.scenario.output.report {
        write_file(p, &text)?;
    }
    if let Some(p) = csv.or(report.scenario.output.csv.as_deref()) {
        write_file(p, &eigen_csv(report))?;
    }
    Ok(text)
}
