//! STREAM kernels and the vector triad over segmented arrays.
//!
//! The parallel loop runs over the logical index space. Every thread walks
//! its scheduled ranges and hands the serial kernel the largest contiguous
//! pieces that stay inside one segment of every array, so the inner loop is
//! a plain slice loop without any per-element branching.

use super::lbm::run_workers;
use super::KernelError;
use crate::array::SegmentedArray;
use crate::layout::LayoutPlan;
use crate::schedule::Schedule;

fn segment_end(plan: &LayoutPlan, pos: usize) -> (usize, usize, usize) {
    let (k, j) = plan.locate(pos).expect("position inside the array");
    (k, j, plan.segment_start(k) + plan.segment_lengths()[k])
}

/// Applies `kernel(out, inputs)` piecewise over all elements, in parallel.
pub fn run_elementwise<const R: usize, F>(
    out: &mut SegmentedArray,
    inputs: [&SegmentedArray; R],
    threads: usize,
    schedule: Schedule,
    kernel: F,
) -> Result<f64, KernelError>
where
    F: Fn(&mut [f64], [&[f64]; R]) + Sync,
{
    schedule.check(threads)?;
    let n = out.len();
    for a in &inputs {
        if a.len() != n {
            return Err(KernelError::LengthMismatch {
                expected: n,
                actual: a.len(),
            });
        }
    }
    let out_plan = out.plan().clone();
    let shared = out.shared();

    let worker = |p: usize| {
        for range in schedule.ranges(p, n, threads) {
            let mut pos = range.start;
            while pos < range.end {
                let (ko, jo, mut end) = segment_end(&out_plan, pos);
                end = end.min(range.end);
                let mut at = [(0usize, 0usize); R];
                for (slot, a) in at.iter_mut().zip(&inputs) {
                    let (k, j, e) = segment_end(a.plan(), pos);
                    *slot = (k, j);
                    end = end.min(e);
                }
                let len = end - pos;
                let ins: [&[f64]; R] = std::array::from_fn(|r| {
                    let (k, j) = at[r];
                    &inputs[r].segment(k).expect("located segment")[j..j + len]
                });
                // SAFETY: the schedule hands every index to exactly one
                // thread, so output pieces of different threads are disjoint.
                let dst = unsafe { shared.slice_mut(ko, jo..jo + len) };
                kernel(dst, ins);
                pos = end;
            }
        }
    };
    Ok(run_workers(threads, &worker))
}

/// `c = a`
pub fn stream_copy(
    c: &mut SegmentedArray,
    a: &SegmentedArray,
    threads: usize,
    schedule: Schedule,
) -> Result<f64, KernelError> {
    run_elementwise(c, [a], threads, schedule, |c, [a]| c.copy_from_slice(a))
}

/// `b = s * c`
pub fn stream_scale(
    b: &mut SegmentedArray,
    c: &SegmentedArray,
    s: f64,
    threads: usize,
    schedule: Schedule,
) -> Result<f64, KernelError> {
    run_elementwise(b, [c], threads, schedule, |b, [c]| {
        for (b, c) in b.iter_mut().zip(c) {
            *b = s * c;
        }
    })
}

/// `c = a + b`
pub fn stream_add(
    c: &mut SegmentedArray,
    a: &SegmentedArray,
    b: &SegmentedArray,
    threads: usize,
    schedule: Schedule,
) -> Result<f64, KernelError> {
    run_elementwise(c, [a, b], threads, schedule, |c, [a, b]| {
        for ((c, a), b) in c.iter_mut().zip(a).zip(b) {
            *c = a + b;
        }
    })
}

/// `a = b + s * c`
pub fn stream_triad(
    a: &mut SegmentedArray,
    b: &SegmentedArray,
    c: &SegmentedArray,
    s: f64,
    threads: usize,
    schedule: Schedule,
) -> Result<f64, KernelError> {
    run_elementwise(a, [b, c], threads, schedule, |a, [b, c]| {
        for ((a, b), c) in a.iter_mut().zip(b).zip(c) {
            *a = b + s * c;
        }
    })
}

fn triad_slice(a: &mut [f64], b: &[f64], c: &[f64], d: &[f64]) {
    for (((a, b), c), d) in a.iter_mut().zip(b).zip(c).zip(d) {
        *a = b + c * d;
    }
}

/// `a = b + c * d`
pub fn vector_triad(
    a: &mut SegmentedArray,
    b: &SegmentedArray,
    c: &SegmentedArray,
    d: &SegmentedArray,
    threads: usize,
    schedule: Schedule,
) -> Result<f64, KernelError> {
    run_elementwise(a, [b, c, d], threads, schedule, |a, [b, c, d]| {
        triad_slice(a, b, c, d)
    })
}

/// `a = b + c * d` on plain contiguous slices, the baseline the segmented
/// version is compared against.
pub fn vector_triad_plain(
    a: &mut [f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
    threads: usize,
    schedule: Schedule,
) -> Result<f64, KernelError> {
    schedule.check(threads)?;
    let n = a.len();
    for len in [b.len(), c.len(), d.len()] {
        if len != n {
            return Err(KernelError::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let out = a.as_mut_ptr() as usize;
    let worker = |p: usize| {
        for r in schedule.ranges(p, n, threads) {
            // SAFETY: scheduled ranges of different threads are disjoint.
            let a = unsafe { std::slice::from_raw_parts_mut((out as *mut f64).add(r.start), r.len()) };
            triad_slice(a, &b[r.clone()], &c[r.clone()], &d[r]);
        }
    };
    Ok(run_workers(threads, &worker))
}
