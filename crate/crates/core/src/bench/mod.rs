//! Experiment orchestration: configs, cross-validated runs, sigma grid
//! search, latency probes and figure data export.

pub mod config;
pub mod report;
pub mod runner;
pub mod task;
pub mod timing;

pub use config::{ExperimentSpec, Hyper, MethodKind, MethodSpec, ModeGrid, TaskSpec};
pub use report::{emit_plot_data, load_report, write_figures, write_report, write_timings, Figure, FigureTable};
pub use runner::{
    fit_hyper, fold_datasets, grid_search_sigma, required_length, run_experiment, CellResult, CellTiming,
    ExperimentReport, ModesReport, Selection, SigmaScore, Summary,
};
pub use task::{generate_task, TaskSeries};
pub use timing::{timing_probe, LatencyStats, MIN_REPEATS, WARMUP_PREDICTIONS};
