//! Address-to-controller mapping, lockstep access traces and controller
//! balance analysis.

mod balance;
mod model;
mod trace;

use thiserror::Error;

use crate::layout::LayoutError;
use crate::schedule::ScheduleError;

pub use balance::{balance, detect_period, sweep_offset, BalanceScore, OffsetSeries};
pub use model::AddressMapModel;
pub use trace::{trace_kernel, AccessRecord, AccessTrace, ArrayGeometry, LayoutSet, VIRTUAL_BASE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("invalid address map: {0}")]
    InvalidModel(String),
    #[error("descriptor does not match layouts: {0}")]
    Descriptor(String),
    #[error("offset {offset} is not a multiple of the element size {element_size}")]
    InvalidOffset { offset: usize, element_size: usize },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("need at least 2 samples, got {0}")]
    InsufficientData(usize),
    #[error("samples are not uniformly spaced")]
    NonUniformSpacing,
    #[error("address range overflow")]
    Overflow,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}
