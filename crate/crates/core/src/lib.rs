//! Memory-layout engineering for machines that interleave addresses over
//! several memory controllers.
//!
//! * [`layout`] and [`array`]: segmented arrays with base alignment,
//!   per-segment alignment, a staggering shift and a global offset.
//! * [`controller`]: bit-field controller/bank mapping, lockstep access
//!   traces of kernels and controller balance scores.
//! * [`kernels`]: STREAM, vector triad, 2-D Jacobi and D3Q19
//!   lattice-Boltzmann kernels, their stream descriptors, traffic models and
//!   reference oracles.

pub mod array;
pub mod controller;
pub mod kernels;
pub mod layout;
pub mod schedule;

pub use array::{Element, SegmentedArray, SharedSegments};
pub use controller::{AddressMapModel, BalanceScore, LayoutSet, MapError};
pub use kernels::{KernelDescriptor, KernelError};
pub use layout::{build_layout, partition, LayoutError, LayoutParams, LayoutPlan};
pub use schedule::{Schedule, ScheduleError};
