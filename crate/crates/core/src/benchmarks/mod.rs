//! Synthetic benchmark problems, accuracy metrics, the replication runner
//! and report writers.

mod experiment;
mod metrics;
mod problems;
pub mod report;

pub use experiment::{
    infer_modes, plot_data, run_experiment, run_experiments, run_trial, test_points, training_data,
    ExperimentConfig, ExperimentSummary, MethodVariant, PlotRow, TrialResult,
};
pub use metrics::{coverage, r_squared, rmse, Stat};
pub use problems::{
    beta_pdf, c_truth, problem, problem_catalog, Problem, TruthFn, PROBLEM_NAMES,
    REGISTRATION_POINTS,
};
