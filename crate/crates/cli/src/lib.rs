//! Command-line pipeline: ingest, summarize, fit-garch, regress, diagnose,
//! report, or all of them in order.
//!
//! Every stage writes a JSON artifact into the output directory and records
//! its SHA-256 in `manifest.json`, so later stages can resume without
//! refitting and refuse to run on inputs that changed underneath them.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod manifest;
pub mod pipeline;
pub mod synth;

pub const EXIT_DATA: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "factorlab", version, about = "Factor-model regressions on raw returns and ARMA-GARCH innovations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse and align the input files into the analysis panel.
    Ingest,
    /// Summary statistics, correlations, ADF, Ljung-Box and Engle-Granger.
    Summarize,
    /// Fit ARMA(1,1)-GARCH(1,1) to every panel series.
    FitGarch,
    /// OLS of excess returns on the factors (and on innovations).
    Regress,
    /// Residual diagnostics, model comparison and plot data.
    Diagnose,
    /// Assemble report.json and the tables.
    Report,
    /// Every stage in order.
    All,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Dataset config file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts, tables and plot data.
    #[arg(long, global = true, env = "FACTORLAB_OUT", default_value = "factorlab-out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Regressor labels, overriding the config's `regressors`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub factors: Option<Vec<String>>,
    /// Also regress the dependent innovation on the factor innovations.
    #[arg(long, global = true)]
    pub use_innovations: bool,
    /// p-value above which backward elimination drops a regressor.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub alpha_out: f64,
    #[arg(long, global = true, default_value_t = 12)]
    pub lb_lags: usize,
    /// Upper bound for the ADF lag search (default: Schwert rule).
    #[arg(long, global = true)]
    pub adf_maxlag: Option<usize>,
    /// Keep going when a GARCH fit does not converge.
    #[arg(long, global = true)]
    pub allow_unconverged: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {message}")]
    Data { stage: &'static str, message: String },
    #[error("{stage}: {message}")]
    Numerical { stage: &'static str, message: String },
    #[error("{stage}: {}: {source}", path.display())]
    Io {
        stage: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data { .. } => EXIT_DATA,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn data(stage: &'static str, message: impl ToString) -> Self {
        CliError::Data {
            stage,
            message: message.to_string(),
        }
    }

    pub(crate) fn numerical(stage: &'static str, message: impl ToString) -> Self {
        CliError::Numerical {
            stage,
            message: message.to_string(),
        }
    }

    pub(crate) fn io(stage: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            stage,
            path: path.into(),
            source,
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
/// Usage errors exit with the data code; `--help` and `--version` exit 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DATA } else { 0 };
        }
    };
    match pipeline::run(cli.command, &cli.options) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
