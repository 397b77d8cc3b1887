//! Structured-grid finite-volume MHD with pluggable loop execution patterns,
//! region profiling and a roofline / portability model.

pub mod exec;
pub mod mesh;
pub mod mhd;
pub mod perf;
pub mod real;

pub use exec::Counted;
pub use real::Real;

use thiserror::Error;

/// Any failure of the library, for callers that do not need to tell them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    #[error(transparent)]
    Exec(#[from] exec::ExecError),
    #[error(transparent)]
    Boundary(#[from] mesh::BoundaryError),
    #[error(transparent)]
    Snapshot(#[from] mesh::SnapshotError),
    #[error(transparent)]
    Wave(#[from] mhd::WaveError),
    #[error(transparent)]
    Solver(#[from] mhd::SolverError),
    #[error(transparent)]
    Perf(#[from] perf::PerfError),
}

pub type MeshF64 = mesh::Mesh<f64>;
pub type MeshF32 = mesh::Mesh<f32>;
pub type MeshCounted = mesh::Mesh<Counted>;
pub type SolverF64 = mhd::Solver<f64>;
pub type SolverCounted = mhd::Solver<Counted>;
