//! Benchmark kernels: timed execution over segmented storage, declarative
//! descriptors for analysis, traffic models and reference oracles.

mod descriptor;
pub mod jacobi;
pub mod lbm;
pub mod reference;
pub mod stream;

use thiserror::Error;

use crate::layout::LayoutError;
use crate::schedule::ScheduleError;

pub use descriptor::{
    predicted_performance, traffic_model, Access, IterSpace, KernelDescriptor, Rate, RateUnit,
    StreamSpec, TrafficModel,
};
pub use jacobi::{jacobi_sweep, relax_line, Jacobi2DGrid};
pub use lbm::{LatticeGeometry, LbmConfig, LbmLattice, LbmLayout};
pub use reference::{reference_oracle, OracleInputs};
pub use stream::{
    stream_add, stream_copy, stream_scale, stream_triad, vector_triad, vector_triad_plain,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("array length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("domain edge {n} too small, need at least {min}")]
    DomainTooSmall { n: usize, min: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported kernel {0:?}")]
    UnsupportedKernel(String),
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}
