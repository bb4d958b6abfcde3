//! Deterministic signal generators, windowing, fold plans and CSV ingestion.

mod folds;
mod io;
pub mod rng;
mod systems;
mod windows;

pub use folds::{kfold_splits, Fold, FoldPlan, DEFAULT_TEST_LEN};
pub use io::{denormalize, load_csv, normalize, read_csv, write_series_csv, Column, Normalization};
pub use systems::{
    add_noise, add_noise_stream, gen_lorenz, gen_mackey_glass, gen_stationary_system, gen_stationary_system_with,
    stationary_component, stationary_response, History, InputScale, LorenzParams, LorenzSeries, MackeyGlassParams,
    StationarySeries, STATIONARY_MEMORY_DEPTH,
};
pub use windows::{embed_windows, windows_for_targets, WindowedDataset};
