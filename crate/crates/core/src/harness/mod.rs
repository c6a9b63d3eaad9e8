//! Experiment configuration, reports and verification suites.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{
    ConstantsGrid, ExperimentConfig, GridSpec, LowerSpec, McSpec, Outputs, SolverSpec,
};
pub use report::{
    constants_csv, run, RunOutput, SimSummary, Summary, TailReport, TailRow, CSV_VERSION,
};
pub use suites::{verify, Check, SuiteReport, ACCEPTANCE, SUITES};
