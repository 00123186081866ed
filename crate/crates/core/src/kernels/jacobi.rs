//! Five-point Jacobi relaxation on a 2-D grid whose rows are segments.

use super::lbm::run_workers;
use super::KernelError;
use crate::array::SegmentedArray;
use crate::layout::LayoutParams;
use crate::schedule::Schedule;

/// Relaxes one interior row. The first and last column are copied through.
pub fn relax_line(dest: &mut [f64], above: &[f64], below: &[f64], center: &[f64]) {
    let n = dest.len();
    debug_assert!(above.len() == n && below.len() == n && center.len() == n);
    dest[0] = center[0];
    dest[n - 1] = center[n - 1];
    for j in 1..n - 1 {
        dest[j] = (above[j] + below[j] + center[j - 1] + center[j + 1]) * 0.25;
    }
}

/// Source and destination planes of an `n x n` relaxation, one segment per
/// row.
pub struct Jacobi2DGrid {
    n: usize,
    source: SegmentedArray,
    dest: SegmentedArray,
}

impl Jacobi2DGrid {
    pub fn new(n: usize, source: &LayoutParams, dest: &LayoutParams) -> Result<Self, KernelError> {
        if n < 3 {
            return Err(KernelError::DomainTooSmall { n, min: 3 });
        }
        let rows = vec![n; n];
        Ok(Self {
            n,
            source: SegmentedArray::new(source, &rows)?,
            dest: SegmentedArray::new(dest, &rows)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> &SegmentedArray {
        &self.source
    }

    pub fn source_mut(&mut self) -> &mut SegmentedArray {
        &mut self.source
    }

    pub fn dest(&self) -> &SegmentedArray {
        &self.dest
    }

    /// Exchanges the roles of the two planes.
    pub fn swap(&mut self) {
        std::mem::swap(&mut self.source, &mut self.dest);
    }

    /// One sweep `dest <- relax(source)`; boundary rows and columns are
    /// copied. Interior rows are the parallel loop.
    pub fn sweep(&mut self, threads: usize, schedule: Schedule) -> Result<f64, KernelError> {
        schedule.check(threads)?;
        let n = self.n;
        let src = &self.source;
        let dst = self.dest.shared();
        let row = |i: usize| src.segment(i).expect("row in range");

        let worker = |p: usize| {
            if p == 0 {
                for i in [0, n - 1] {
                    // SAFETY: boundary rows are only written by thread 0.
                    unsafe { dst.slice_mut(i, 0..n) }.copy_from_slice(row(i));
                }
            }
            for range in schedule.ranges(p, n - 2, threads) {
                for i in range.start + 1..range.end + 1 {
                    // SAFETY: each interior row belongs to exactly one thread.
                    let d = unsafe { dst.slice_mut(i, 0..n) };
                    relax_line(d, row(i - 1), row(i + 1), row(i));
                }
            }
        };
        Ok(run_workers(threads, &worker))
    }
}

/// Free-function form of [`Jacobi2DGrid::sweep`].
pub fn jacobi_sweep(grid: &mut Jacobi2DGrid, threads: usize, schedule: Schedule) -> Result<f64, KernelError> {
    grid.sweep(threads, schedule)
}
