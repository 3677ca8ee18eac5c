//! Batch runner behind the `jones` binary: reproducible experiment configs,
//! line-delimited JSON reports and CSV summaries.

pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

pub use commands::{execute, Outcome};
pub use config::{Command, ExperimentConfig, OutputFormat, SizeRange};
pub use report::{parse_records, payload_digest, write_csv, write_records, ReportRecord};

/// Exit status for a run whose numeric acceptance check failed.
pub const EXIT_NUMERIC_FAILURE: i32 = 2;
/// Exit status for unreadable or inconsistent input.
pub const EXIT_INPUT_ERROR: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot write report: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] jones_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !commands::is_input_error(e) => EXIT_NUMERIC_FAILURE,
            _ => EXIT_INPUT_ERROR,
        }
    }
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.input_failure {
            EXIT_INPUT_ERROR
        } else if self.numeric_failure {
            EXIT_NUMERIC_FAILURE
        } else {
            0
        }
    }
}

/// Writes the records in the configured format to `--out` or stdout.
pub fn emit(cfg: &ExperimentConfig, records: &[ReportRecord]) -> Result<(), CliError> {
    let sink: Box<dyn std::io::Write> = match &cfg.out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    match cfg.format {
        OutputFormat::Records => write_records(sink, records),
        OutputFormat::Csv => write_csv(sink, records),
    }
}
