//! Factor-model regression laboratory.
//!
//! The crate reproduces two analyses of monthly excess stock returns: an OLS
//! regression on Fama-French factors, and the same regression run on the
//! standardized innovations left after filtering every series through an
//! ARMA(1,1)-GARCH(1,1) model. Around both sits the usual diagnostic battery
//! (unit-root, portmanteau, cointegration, Durbin-Watson, Jarque-Bera, VIF,
//! leverage and Cook's distance) and a report assembler that writes tables and
//! plot data to disk.
//!
//! Modules, bottom-up:
//!
//! - [`ingest`]: CSV parsing, monthly alignment and the [`ingest::FactorPanel`].
//! - [`series`]: log returns, summary statistics, correlation matrices.
//! - [`dist`]: normal, Student-t and chi-square distribution helpers.
//! - [`optim`]: Nelder-Mead simplex minimizer.
//! - [`tsmodel`]: ARMA(1,1)-GARCH(1,1) likelihood, fitting, filtering, simulation.
//! - [`regress`]: OLS with inference, influence measures and backward elimination.
//! - [`stests`]: ADF, Ljung-Box, Engle-Granger, Durbin-Watson, Jarque-Bera, VIF.
//! - [`report`]: plot-data builders, model comparison, table rendering.

pub mod dist;
pub mod ingest;
pub mod optim;
pub mod regress;
pub mod report;
pub mod series;
pub mod stests;
pub mod tsmodel;

mod serde_float;

pub use ingest::{DatasetConfig, FactorPanel, RawTable, YearMonth};
pub use regress::{DesignSpec, OlsFit};
pub use report::AnalysisReport;
pub use series::{CorrelationMatrix, ReturnSeries, SummaryStats};
pub use stests::{TestResult, Verdict};
pub use tsmodel::{ArmaGarchFit, ArmaGarchParams};
