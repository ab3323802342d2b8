//! Experiment configuration, the case-study pipeline and report rendering.

mod config;
mod pipeline;
mod report;

pub use config::{Budgets, ExperimentConfig, SimSetup, PRESETS};
pub use pipeline::{
    make_demo, metric_line, run_ba, run_case_study, run_drl, run_hifi_baseline, run_lofi, run_seed,
    BaInit, BaRun, DrlRun,
};
pub use report::{median, MethodResult, OmittedRow, RunReport, SeedReport, SummaryRow};
