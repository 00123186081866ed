//! Benchmark harness: timed runs, address-map analysis and traffic-model
//! predictions of the `interleave` kernels, with CSV output.

pub mod config;
pub mod recipe;
pub mod report;
pub mod run;
pub mod sweep;
pub mod timing;

use thiserror::Error;

pub use config::{config_file_args, BenchConfig, KernelKind, Mode, Placement};
pub use recipe::{recipe_check, RecipeReport, RECIPES};
pub use report::{emit_csv, read_csv, write_csv};
pub use run::{analysis_layouts, analyze, run, thrashing_candidate, BenchRecord};
pub use sweep::{parse_values, sweep, SweepSeries, SweepVar};
pub use timing::{time_reps, Timing};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Kernel(#[from] interleave::KernelError),
    #[error(transparent)]
    Map(#[from] interleave::MapError),
    #[error(transparent)]
    Layout(#[from] interleave::LayoutError),
    #[error(transparent)]
    Schedule(#[from] interleave::ScheduleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Csv(e.to_string())
    }
}
