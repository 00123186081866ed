//! Byte-level planning of segmented arrays.
//!
//! A logical array of `N` elements is cut into segments. The first segment
//! starts at `offset` bytes from the (aligned) allocation base. Every later
//! segment is moved up to the next multiple of `segment_alignment` and then
//! receives an additional `(k * shift) % segment_alignment` bytes of padding,
//! so that successive segment bases walk through distinct residues modulo the
//! alignment. The global `offset` moves the whole block, so with segment
//! alignment enabled every segment `k` satisfies
//!
//! ```text
//! (byte_offset[k] - offset - (k * shift) % segment_alignment) % segment_alignment == 0
//! ```

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("cannot partition {n} elements into {parts} segments")]
    InvalidPartition { n: usize, parts: usize },
    #[error("{field} must be a nonzero power of two, got {value}")]
    NotPowerOfTwo { field: &'static str, value: usize },
    #[error("{field} = {value} is not a multiple of the element size {element_size}")]
    Misaligned {
        field: &'static str,
        value: usize,
        element_size: usize,
    },
    #[error("segment alignment {segment_alignment} is smaller than the element size {element_size}")]
    AlignmentBelowElement {
        segment_alignment: usize,
        element_size: usize,
    },
    #[error("shift {shift} must be smaller than the segment alignment {segment_alignment}")]
    ShiftTooLarge {
        shift: usize,
        segment_alignment: usize,
    },
    #[error("layout needs at least one segment")]
    EmptyLayout,
    #[error("layout size overflows the address space")]
    Overflow,
    #[error("allocation of {bytes} bytes aligned to {align} failed")]
    Allocation { bytes: usize, align: usize },
    #[error("plan element size {plan} does not match element type size {element}")]
    ElementSize { plan: usize, element: usize },
    #[error("segment {index} out of range (segment count {count})")]
    SegmentOutOfRange { index: usize, count: usize },
    #[error("element {index} out of range in segment {segment} of length {len}")]
    ElementOutOfRange {
        segment: usize,
        index: usize,
        len: usize,
    },
    #[error("expected {expected} elements, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Rounds `x` up to a multiple of `align`. An alignment of zero disables
/// rounding.
pub fn align_up(x: usize, align: usize) -> Option<usize> {
    if align == 0 {
        return Some(x);
    }
    let rem = x % align;
    if rem == 0 {
        Some(x)
    } else {
        x.checked_add(align - rem)
    }
}

/// Splits `n` elements into `parts` segments: the first `n % parts` segments
/// get `n / parts + 1` elements, the rest `n / parts`.
pub fn partition(n: usize, parts: usize) -> Result<Vec<usize>, LayoutError> {
    if parts == 0 || n < parts {
        return Err(LayoutError::InvalidPartition { n, parts });
    }
    let base = n / parts;
    let extra = n % parts;
    Ok((0..parts)
        .map(|k| if k < extra { base + 1 } else { base })
        .collect())
}

/// Alignment, padding and offset parameters of a segmented array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutParams {
    /// Bytes per element.
    pub element_size: usize,
    /// Alignment of the allocation base, a power of two.
    pub base_alignment: usize,
    /// Boundary every segment except the first is moved to; 0 disables it.
    pub segment_alignment: usize,
    /// Per-segment stagger added after segment alignment.
    pub shift: usize,
    /// Displacement of the whole block from the allocation base.
    pub offset: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            element_size: 8,
            base_alignment: 64,
            segment_alignment: 0,
            shift: 0,
            offset: 0,
        }
    }
}

impl LayoutParams {
    pub fn with_base_alignment(mut self, align: usize) -> Self {
        self.base_alignment = align;
        self
    }

    pub fn with_segment_alignment(mut self, align: usize) -> Self {
        self.segment_alignment = align;
        self
    }

    pub fn with_shift(mut self, shift: usize) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_offset(mut self, offset: usize) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_element_size(mut self, size: usize) -> Self {
        self.element_size = size;
        self
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let es = self.element_size;
        if !es.is_power_of_two() {
            return Err(LayoutError::NotPowerOfTwo {
                field: "element_size",
                value: es,
            });
        }
        if !self.base_alignment.is_power_of_two() {
            return Err(LayoutError::NotPowerOfTwo {
                field: "base_alignment",
                value: self.base_alignment,
            });
        }
        if self.segment_alignment != 0 {
            if !self.segment_alignment.is_power_of_two() {
                return Err(LayoutError::NotPowerOfTwo {
                    field: "segment_alignment",
                    value: self.segment_alignment,
                });
            }
            if self.segment_alignment < es {
                return Err(LayoutError::AlignmentBelowElement {
                    segment_alignment: self.segment_alignment,
                    element_size: es,
                });
            }
            if self.shift >= self.segment_alignment {
                return Err(LayoutError::ShiftTooLarge {
                    shift: self.shift,
                    segment_alignment: self.segment_alignment,
                });
            }
        }
        for (field, value) in [("shift", self.shift), ("offset", self.offset)] {
            if value % es != 0 {
                return Err(LayoutError::Misaligned {
                    field,
                    value,
                    element_size: es,
                });
            }
        }
        Ok(())
    }
}

/// Resolved byte placement of every segment relative to the allocation base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutPlan {
    element_size: usize,
    segment_alignment: usize,
    segment_byte_offsets: Vec<usize>,
    segment_lengths: Vec<usize>,
    /// Logical index of the first element of each segment, plus `N` at the end.
    segment_starts: Vec<usize>,
    total_bytes: usize,
}

impl LayoutPlan {
    /// Plan with no segments and no storage.
    pub fn empty(element_size: usize) -> Self {
        Self {
            element_size,
            segment_alignment: 0,
            segment_byte_offsets: Vec::new(),
            segment_lengths: Vec::new(),
            segment_starts: vec![0],
            total_bytes: 0,
        }
    }

    /// Single contiguous segment of `n` elements.
    pub fn contiguous(n: usize, element_size: usize) -> Result<Self, LayoutError> {
        build_layout(
            &LayoutParams::default().with_element_size(element_size),
            &[n],
        )
    }

    pub fn element_size(&self) -> usize {
        self.element_size
    }

    pub fn segment_alignment(&self) -> usize {
        self.segment_alignment
    }

    pub fn segment_byte_offsets(&self) -> &[usize] {
        &self.segment_byte_offsets
    }

    pub fn segment_lengths(&self) -> &[usize] {
        &self.segment_lengths
    }

    pub fn total_bytes(&self) -> usize {
        self.total_bytes
    }

    pub fn segment_count(&self) -> usize {
        self.segment_lengths.len()
    }

    /// Logical element count `N`.
    pub fn len(&self) -> usize {
        *self.segment_starts.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Logical index of the first element of segment `k`.
    pub fn segment_start(&self, k: usize) -> usize {
        self.segment_starts[k]
    }

    /// Maps a logical element index to `(segment, local index)`.
    pub fn locate(&self, index: usize) -> Option<(usize, usize)> {
        if index >= self.len() {
            return None;
        }
        // last segment starting at or before index; zero-length segments
        // share their start with the successor and are skipped over
        let k = self.segment_starts.partition_point(|&s| s <= index) - 1;
        Some((k, index - self.segment_starts[k]))
    }

    /// Byte offset of element `j` of segment `k` from the allocation base.
    pub fn element_offset(&self, k: usize, j: usize) -> Result<usize, LayoutError> {
        let len = *self
            .segment_lengths
            .get(k)
            .ok_or(LayoutError::SegmentOutOfRange {
                index: k,
                count: self.segment_count(),
            })?;
        if j >= len {
            return Err(LayoutError::ElementOutOfRange {
                segment: k,
                index: j,
                len,
            });
        }
        Ok(self.segment_byte_offsets[k] + j * self.element_size)
    }
}

/// Resolves layout parameters and segment lengths into byte offsets.
pub fn build_layout(params: &LayoutParams, lengths: &[usize]) -> Result<LayoutPlan, LayoutError> {
    params.validate()?;
    if lengths.is_empty() {
        return Err(LayoutError::EmptyLayout);
    }
    let es = params.element_size;
    let align = params.segment_alignment;

    let mut offsets = Vec::with_capacity(lengths.len());
    let mut starts = Vec::with_capacity(lengths.len() + 1);
    let mut cursor = 0usize;
    let mut logical = 0usize;
    for (k, &len) in lengths.iter().enumerate() {
        let start = if k == 0 || align == 0 {
            cursor
        } else {
            let stagger = ((k as u128 * params.shift as u128) % align as u128) as usize;
            align_up(cursor, align)
                .and_then(|a| a.checked_add(stagger))
                .ok_or(LayoutError::Overflow)?
        };
        offsets.push(start.checked_add(params.offset).ok_or(LayoutError::Overflow)?);
        starts.push(logical);
        cursor = len
            .checked_mul(es)
            .and_then(|bytes| start.checked_add(bytes))
            .ok_or(LayoutError::Overflow)?;
        logical = logical.checked_add(len).ok_or(LayoutError::Overflow)?;
    }
    starts.push(logical);
    let total_bytes = cursor.checked_add(params.offset).ok_or(LayoutError::Overflow)?;
    if total_bytes > isize::MAX as usize {
        return Err(LayoutError::Overflow);
    }

    Ok(LayoutPlan {
        element_size: es,
        segment_alignment: align,
        segment_byte_offsets: offsets,
        segment_lengths: lengths.to_vec(),
        segment_starts: starts,
        total_bytes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residues(plan: &LayoutPlan, modulus: usize) -> Vec<usize> {
        plan.segment_byte_offsets()
            .iter()
            .map(|o| o % modulus)
            .collect()
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition(10, 3).unwrap(), vec![4, 3, 3]);
        assert_eq!(partition(8, 8).unwrap(), vec![1; 8]);
        assert_eq!(partition(1 << 25, 64).unwrap(), vec![524288; 64]);
    }

    #[test]
    fn partition_rejects_bad_counts() {
        assert_eq!(
            partition(5, 0),
            Err(LayoutError::InvalidPartition { n: 5, parts: 0 })
        );
        assert!(partition(3, 4).is_err());
    }

    #[test]
    fn staggered_rows_hit_four_residues() {
        let params = LayoutParams::default()
            .with_segment_alignment(512)
            .with_shift(128);
        let plan = build_layout(&params, &[64, 64, 64, 64]).unwrap();
        assert_eq!(residues(&plan, 512), vec![0, 128, 256, 384]);
    }

    #[test]
    fn packed_layout() {
        let plan = build_layout(&LayoutParams::default(), &[5, 5]).unwrap();
        assert_eq!(plan.segment_byte_offsets(), &[0, 40]);
        assert_eq!(plan.total_bytes(), 80);
    }

    #[test]
    fn zero_shift_keeps_residue() {
        let params = LayoutParams::default()
            .with_segment_alignment(512)
            .with_offset(256);
        let plan = build_layout(&params, &[64, 64]).unwrap();
        assert_eq!(residues(&plan, 512), vec![256, 256]);
    }

    #[test]
    fn first_segment_is_not_realigned() {
        let params = LayoutParams::default()
            .with_segment_alignment(512)
            .with_shift(128)
            .with_offset(24);
        let plan = build_layout(&params, &[3, 3]).unwrap();
        assert_eq!(plan.segment_byte_offsets()[0], 24);
        assert_eq!(plan.segment_byte_offsets()[1], 512 + 128 + 24);
    }

    #[test]
    fn invalid_params() {
        let p = LayoutParams::default().with_segment_alignment(384);
        assert!(matches!(p.validate(), Err(LayoutError::NotPowerOfTwo { .. })));
        let p = LayoutParams::default()
            .with_segment_alignment(512)
            .with_shift(512);
        assert!(matches!(p.validate(), Err(LayoutError::ShiftTooLarge { .. })));
        let p = LayoutParams::default().with_offset(12);
        assert!(matches!(p.validate(), Err(LayoutError::Misaligned { .. })));
        let p = LayoutParams::default().with_base_alignment(0);
        assert!(p.validate().is_err());
        assert_eq!(
            build_layout(&LayoutParams::default(), &[]),
            Err(LayoutError::EmptyLayout)
        );
    }

    #[test]
    fn overflow_is_reported() {
        let r = build_layout(&LayoutParams::default(), &[usize::MAX / 4, 1]);
        assert_eq!(r, Err(LayoutError::Overflow));
    }

    #[test]
    fn locate_maps_logical_indices() {
        let plan = build_layout(&LayoutParams::default(), &[4, 3, 3]).unwrap();
        assert_eq!(plan.locate(0), Some((0, 0)));
        assert_eq!(plan.locate(3), Some((0, 3)));
        assert_eq!(plan.locate(4), Some((1, 0)));
        assert_eq!(plan.locate(9), Some((2, 2)));
        assert_eq!(plan.locate(10), None);
    }

    #[test]
    fn element_offsets() {
        let params = LayoutParams::default().with_offset(64);
        let plan = build_layout(&params, &[100]).unwrap();
        assert_eq!(plan.element_offset(0, 0).unwrap(), 64);
        assert_eq!(plan.element_offset(0, 64).unwrap(), 64 + 512);
        assert!(plan.element_offset(0, 100).is_err());
        assert!(plan.element_offset(1, 0).is_err());
    }

    fn params_strategy() -> impl Strategy<Value = (LayoutParams, Vec<usize>)> {
        (0u32..=16, 3u32..=16, 0usize..64, 0usize..512).prop_flat_map(|(seg_pow, base_pow, shift_raw, off_raw)| {
            let seg = if seg_pow < 3 { 0 } else { 1usize << seg_pow };
            let shift = if seg == 0 { 0 } else { (shift_raw * 8) % seg };
            let params = LayoutParams {
                element_size: 8,
                base_alignment: 1 << base_pow,
                segment_alignment: seg,
                shift,
                offset: off_raw * 8,
            };
            (Just(params), prop::collection::vec(0usize..300, 1..20))
        })
    }

    proptest! {
        #[test]
        fn segments_ordered_disjoint_and_aligned((params, lengths) in params_strategy()) {
            let plan = build_layout(&params, &lengths).unwrap();
            let offs = plan.segment_byte_offsets();
            prop_assert_eq!(plan.len(), lengths.iter().sum::<usize>());
            prop_assert_eq!(offs[0], params.offset);
            for k in 0..lengths.len() {
                if k + 1 < lengths.len() {
                    prop_assert!(offs[k] + lengths[k] * 8 <= offs[k + 1]);
                }
                let s = params.segment_alignment;
                if s > 0 && k > 0 {
                    let expect = (k * params.shift) % s;
                    prop_assert_eq!((offs[k] - params.offset - expect) % s, 0);
                }
            }
            let last = lengths.len() - 1;
            prop_assert!(offs[last] + lengths[last] * 8 <= plan.total_bytes());
        }

        #[test]
        fn partition_sums_and_balances(n in 1usize..10_000, t in 1usize..128) {
            prop_assume!(n >= t);
            let parts = partition(n, t).unwrap();
            prop_assert_eq!(parts.len(), t);
            prop_assert_eq!(parts.iter().sum::<usize>(), n);
            let max = *parts.iter().max().unwrap();
            let min = *parts.iter().min().unwrap();
            prop_assert!(max - min <= 1);
            prop_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
