//! Driver library behind the `pmhd` binary: configuration, the run,
//! convergence, benchmark and scaling commands, and performance reports.

pub mod commands;
pub mod config;
pub mod stats;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{
    cmd_bench, cmd_convergence, cmd_report, cmd_roofline, cmd_run, cmd_scale, region_coverage, BenchRow,
    ConvergenceRow, ReportSummary, RooflineSummary, RunSummary, ScaleReport, ScaleRow,
};
pub use config::{Mode, Overrides, RunConfig, ScaleMode, WORKERS_ENV};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] pmhd_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

macro_rules! via_core {
    ($($t:ty),*) => {$(
        impl From<$t> for BenchError {
            fn from(e: $t) -> Self {
                BenchError::Core(e.into())
            }
        }
    )*};
}

via_core!(
    pmhd_core::mesh::MeshError,
    pmhd_core::mesh::SnapshotError,
    pmhd_core::exec::ExecError,
    pmhd_core::mhd::WaveError,
    pmhd_core::mhd::SolverError,
    pmhd_core::perf::PerfError
);

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T, BenchError>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T, BenchError> {
        self.map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
    }
}
