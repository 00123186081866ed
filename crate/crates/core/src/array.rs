//! Aligned storage for segmented arrays.

use std::alloc::{self, Layout};
use std::fmt;
use std::marker::PhantomData;
use std::ops::Range;
use std::ptr::NonNull;

use crate::layout::{build_layout, LayoutError, LayoutParams, LayoutPlan};

/// Numeric element types a [`SegmentedArray`] can hold.
///
/// # Safety
///
/// The all-zero bit pattern must be a valid value of the type.
pub unsafe trait Element: Copy + Default + Send + Sync + PartialEq + fmt::Debug + 'static {}

unsafe impl Element for f64 {}
unsafe impl Element for f32 {}

/// A numeric array split into individually placed, contiguous segments.
///
/// The allocation base is aligned to the requested base alignment (and to the
/// segment alignment of the plan, whichever is larger), so byte residues of
/// the plan carry over to real addresses.
pub struct SegmentedArray<T: Element = f64> {
    ptr: NonNull<u8>,
    alloc: Option<Layout>,
    plan: LayoutPlan,
    _marker: PhantomData<T>,
}

// SAFETY: the array owns its buffer exclusively; access follows the borrow of
// `self` (or the documented contract of `SharedSegments`).
unsafe impl<T: Element> Send for SegmentedArray<T> {}
unsafe impl<T: Element> Sync for SegmentedArray<T> {}

impl<T: Element> SegmentedArray<T> {
    /// Plans and allocates in one go.
    pub fn new(params: &LayoutParams, lengths: &[usize]) -> Result<Self, LayoutError> {
        let plan = build_layout(params, lengths)?;
        Self::allocate(plan, params.base_alignment)
    }

    /// Single-segment array of `n` zeros.
    pub fn contiguous(n: usize, base_alignment: usize) -> Result<Self, LayoutError> {
        let plan = LayoutPlan::contiguous(n, std::mem::size_of::<T>())?;
        Self::allocate(plan, base_alignment)
    }

    /// Allocates zeroed storage for `plan` with its base aligned to
    /// `base_alignment`.
    pub fn allocate(plan: LayoutPlan, base_alignment: usize) -> Result<Self, LayoutError> {
        let element = std::mem::size_of::<T>();
        if plan.element_size() != element {
            return Err(LayoutError::ElementSize {
                plan: plan.element_size(),
                element,
            });
        }
        if !base_alignment.is_power_of_two() {
            return Err(LayoutError::NotPowerOfTwo {
                field: "base_alignment",
                value: base_alignment,
            });
        }
        let align = base_alignment
            .max(plan.segment_alignment())
            .max(std::mem::align_of::<T>());
        let bytes = plan.total_bytes();
        if bytes == 0 {
            // SAFETY: align is a nonzero power of two.
            let ptr = unsafe { NonNull::new_unchecked(align as *mut u8) };
            return Ok(Self {
                ptr,
                alloc: None,
                plan,
                _marker: PhantomData,
            });
        }
        let layout = Layout::from_size_align(bytes, align)
            .map_err(|_| LayoutError::Allocation { bytes, align })?;
        // SAFETY: layout has nonzero size.
        let raw = unsafe { alloc::alloc_zeroed(layout) };
        let ptr = NonNull::new(raw).ok_or(LayoutError::Allocation { bytes, align })?;
        Ok(Self {
            ptr,
            alloc: Some(layout),
            plan,
            _marker: PhantomData,
        })
    }

    pub fn plan(&self) -> &LayoutPlan {
        &self.plan
    }

    /// Address of the allocation base.
    pub fn base_address(&self) -> usize {
        self.ptr.as_ptr() as usize
    }

    pub fn len(&self) -> usize {
        self.plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        self.plan.segment_count()
    }

    fn check_segment(&self, k: usize) -> Result<(), LayoutError> {
        if k >= self.segment_count() {
            return Err(LayoutError::SegmentOutOfRange {
                index: k,
                count: self.segment_count(),
            });
        }
        Ok(())
    }

    fn segment_ptr(&self, k: usize) -> *mut T {
        // SAFETY: the plan keeps every segment inside the allocation.
        unsafe {
            self.ptr
                .as_ptr()
                .add(self.plan.segment_byte_offsets()[k])
                .cast::<T>()
        }
    }

    /// Contiguous view of segment `k`.
    pub fn segment(&self, k: usize) -> Result<&[T], LayoutError> {
        self.check_segment(k)?;
        let len = self.plan.segment_lengths()[k];
        // SAFETY: in bounds, aligned (offsets are element multiples), zero
        // initialised, borrowed immutably through `self`.
        Ok(unsafe { std::slice::from_raw_parts(self.segment_ptr(k), len) })
    }

    pub fn segment_mut(&mut self, k: usize) -> Result<&mut [T], LayoutError> {
        self.check_segment(k)?;
        let len = self.plan.segment_lengths()[k];
        // SAFETY: as above, exclusive through `&mut self`.
        Ok(unsafe { std::slice::from_raw_parts_mut(self.segment_ptr(k), len) })
    }

    pub fn segments(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.segment_count()).map(move |k| self.segment(k).unwrap())
    }

    /// Mutable views of all segments at once.
    pub fn segments_mut(&mut self) -> Vec<&mut [T]> {
        let lens = self.plan.segment_lengths();
        (0..lens.len())
            // SAFETY: segments never overlap, so the views are disjoint.
            .map(|k| unsafe { std::slice::from_raw_parts_mut(self.segment_ptr(k), lens[k]) })
            .collect()
    }

    /// Absolute address of element `j` of segment `k`.
    pub fn element_address(&self, k: usize, j: usize) -> Result<usize, LayoutError> {
        Ok(self.base_address() + self.plan.element_offset(k, j)?)
    }

    /// Element at logical index `i`.
    pub fn get(&self, i: usize) -> Option<T> {
        let (k, j) = self.plan.locate(i)?;
        self.segment(k).ok().map(|s| s[j])
    }

    /// Iterates all elements in logical order, crossing segment gaps.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        self.segments().flatten()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().copied().collect()
    }

    /// Copies `values` into the array in logical order.
    pub fn copy_from_slice(&mut self, values: &[T]) -> Result<(), LayoutError> {
        if values.len() != self.len() {
            return Err(LayoutError::LengthMismatch {
                expected: self.len(),
                actual: values.len(),
            });
        }
        let mut rest = values;
        for seg in self.segments_mut() {
            let (head, tail) = rest.split_at(seg.len());
            seg.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn fill(&mut self, value: T) {
        for seg in self.segments_mut() {
            seg.fill(value);
        }
    }

    /// Unsynchronised write handle for workers that update disjoint ranges.
    pub fn shared(&mut self) -> SharedSegments<'_, T> {
        SharedSegments {
            ptrs: (0..self.segment_count()).map(|k| self.segment_ptr(k)).collect(),
            lens: self.plan.segment_lengths().to_vec(),
            _marker: PhantomData,
        }
    }
}

impl<T: Element> Drop for SegmentedArray<T> {
    fn drop(&mut self) {
        if let Some(layout) = self.alloc {
            // SAFETY: allocated in `allocate` with exactly this layout.
            unsafe { alloc::dealloc(self.ptr.as_ptr(), layout) };
        }
    }
}

impl<T: Element> fmt::Debug for SegmentedArray<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SegmentedArray")
            .field("base", &format_args!("{:#x}", self.base_address()))
            .field("plan", &self.plan)
            .finish()
    }
}

/// Write access to the segments of an exclusively borrowed array that can be
/// handed to several threads.
///
/// Callers promise that no element is accessed by more than one thread while
/// any of them writes to it.
pub struct SharedSegments<'a, T: Element> {
    ptrs: Vec<*mut T>,
    lens: Vec<usize>,
    _marker: PhantomData<&'a mut T>,
}

// SAFETY: see the type-level contract; disjointness is the caller's duty.
unsafe impl<T: Element> Send for SharedSegments<'_, T> {}
unsafe impl<T: Element> Sync for SharedSegments<'_, T> {}

impl<T: Element> SharedSegments<'_, T> {
    pub fn segment_count(&self) -> usize {
        self.lens.len()
    }

    pub fn segment_len(&self, k: usize) -> usize {
        self.lens[k]
    }

    /// # Safety
    ///
    /// No other live reference may overlap `range` of segment `k`.
    #[allow(clippy::mut_from_ref)]
    pub unsafe fn slice_mut(&self, k: usize, range: Range<usize>) -> &mut [T] {
        assert!(range.start <= range.end && range.end <= self.lens[k]);
        std::slice::from_raw_parts_mut(self.ptrs[k].add(range.start), range.len())
    }

    /// Raw pointer to element `j` of segment `k`.
    pub fn element_ptr(&self, k: usize, j: usize) -> *mut T {
        assert!(j < self.lens[k]);
        // SAFETY: bounds checked above.
        unsafe { self.ptrs[k].add(j) }
    }
}
