//! Regret experiments, slope diagnostics and CSV output. Experiments run in
//! `f64`.

mod config;
mod experiment;
mod output;

pub use config::{ExperimentConfig, Mode, PriorSpec, ThetaSpec, ValueEval, ValueMethod, PriorValue};
pub use experiment::{
    benchmark_value, bayesian_regret_experiment, frequentist_regret_experiment, prior_averaged_value,
    run_experiment, RegretRow, RegretSeries,
};
pub use output::{
    default_window, emit_csv, emit_posterior_weights, format_sig, loglog_slope, loglog_slope_values, read_csv,
    write_csv, CSV_HEADER, POSTERIOR_WEIGHTS_HEADER,
};
