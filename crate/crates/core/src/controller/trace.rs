use super::{AddressMapModel, MapError};
use crate::array::{Element, SegmentedArray};
use crate::kernels::lbm::{LbmLattice, Real};
use crate::kernels::{Access, IterSpace, KernelDescriptor, LatticeGeometry};
use crate::layout::{align_up, LayoutPlan};
use crate::schedule::Schedule;

/// Default start of the virtual address range used for analysed layouts.
/// Aligned to 4 GiB, so any practical base alignment holds.
pub const VIRTUAL_BASE: u64 = 1 << 32;

/// Where an array of a kernel lives and how loop coordinates map onto it.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrayGeometry {
    /// One-dimensional array; the first coordinate is the logical index.
    Linear { plan: LayoutPlan, base: u64 },
    /// Square grid stored one row per segment; coordinates are `[row, col]`.
    Rows { plan: LayoutPlan, base: u64 },
    /// Haloed lattice; coordinates are `[x, y, z]` plus a population index.
    Lattice {
        geometry: LatticeGeometry,
        element_size: usize,
        base: u64,
    },
}

impl ArrayGeometry {
    /// Linear view of an allocated array at its real address.
    pub fn of_array<T: Element>(a: &SegmentedArray<T>) -> Self {
        ArrayGeometry::Linear {
            plan: a.plan().clone(),
            base: a.base_address() as u64,
        }
    }

    /// Row view of an allocated grid at its real address.
    pub fn rows_of<T: Element>(a: &SegmentedArray<T>) -> Self {
        ArrayGeometry::Rows {
            plan: a.plan().clone(),
            base: a.base_address() as u64,
        }
    }

    pub fn lattice_of<T: Real>(lattice: &LbmLattice<T>, grid: usize) -> Self {
        ArrayGeometry::Lattice {
            geometry: *lattice.geometry(),
            element_size: std::mem::size_of::<T>(),
            base: lattice.grid(grid).base_address() as u64,
        }
    }

    fn bytes(&self) -> u64 {
        match self {
            ArrayGeometry::Linear { plan, .. } | ArrayGeometry::Rows { plan, .. } => plan.total_bytes() as u64,
            ArrayGeometry::Lattice {
                geometry,
                element_size,
                ..
            } => (geometry.elements() * element_size) as u64,
        }
    }

    fn rebase(&mut self, new_base: u64) {
        match self {
            ArrayGeometry::Linear { base, .. }
            | ArrayGeometry::Rows { base, .. }
            | ArrayGeometry::Lattice { base, .. } => *base = new_base,
        }
    }

    fn fits(&self, space: &IterSpace) -> bool {
        matches!(
            (self, space),
            (ArrayGeometry::Linear { .. }, IterSpace::Linear { .. })
                | (ArrayGeometry::Rows { .. }, IterSpace::Grid2D { .. })
                | (ArrayGeometry::Lattice { .. }, IterSpace::Lattice3D { .. })
        )
    }

    /// Byte address of the element at loop coordinates `p`, if it exists.
    pub fn address(&self, p: [isize; 3], component: usize) -> Option<u64> {
        match self {
            ArrayGeometry::Linear { plan, base } => {
                let i = usize::try_from(p[0]).ok()?;
                let (k, j) = plan.locate(i)?;
                Some(base + plan.element_offset(k, j).ok()? as u64)
            }
            ArrayGeometry::Rows { plan, base } => {
                let row = usize::try_from(p[0]).ok()?;
                let col = usize::try_from(p[1]).ok()?;
                Some(base + plan.element_offset(row, col).ok()? as u64)
            }
            ArrayGeometry::Lattice {
                geometry,
                element_size,
                base,
            } => {
                if !geometry.contains(p) || component >= crate::kernels::lbm::Q {
                    return None;
                }
                let [x, y, z] = p.map(|c| c as usize);
                Some(base + (geometry.index(x, y, z, component) * element_size) as u64)
            }
        }
    }
}

/// The arrays a kernel descriptor refers to, by index.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSet {
    pub arrays: Vec<ArrayGeometry>,
}

impl LayoutSet {
    pub fn new(arrays: Vec<ArrayGeometry>) -> Self {
        Self { arrays }
    }

    /// `count` arrays of `n` elements declared back to back in one block,
    /// each padded by `offset` bytes, as a Fortran COMMON block with
    /// `ndim = n + offset` would place them.
    pub fn common_block(count: usize, n: usize, element_size: usize, offset: usize, base: u64) -> Result<Self, MapError> {
        if !offset.is_multiple_of(element_size) {
            return Err(MapError::InvalidOffset { offset, element_size });
        }
        let plan = LayoutPlan::contiguous(n, element_size)?;
        let stride = (n * element_size + offset) as u64;
        Ok(Self::new(
            (0..count as u64)
                .map(|k| ArrayGeometry::Linear {
                    plan: plan.clone(),
                    base: base + k * stride,
                })
                .collect(),
        ))
    }

    /// Places each geometry in its own region, starting at `base` and
    /// aligned to `alignment`, in order. Existing bases are replaced.
    pub fn packed_aligned(mut arrays: Vec<ArrayGeometry>, alignment: usize, base: u64) -> Result<Self, MapError> {
        if !alignment.is_power_of_two() {
            return Err(MapError::InvalidModel(format!("alignment {alignment} is not a power of two")));
        }
        let mut cursor = base;
        for a in &mut arrays {
            let start = align_up(cursor as usize, alignment).ok_or(MapError::Overflow)? as u64;
            a.rebase(start);
            cursor = start + a.bytes().max(1);
        }
        Ok(Self::new(arrays))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessRecord {
    pub thread: u32,
    pub stream: u32,
    /// Address of the touched cache line.
    pub line: u64,
    pub access: Access,
}

/// Cache lines touched by all threads, one entry per lockstep iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessTrace {
    pub model: AddressMapModel,
    pub threads: usize,
    pub streams: usize,
    pub steps: Vec<Vec<AccessRecord>>,
}

impl AccessTrace {
    pub fn records(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

/// Lockstep trace of a kernel: step `s` holds, for each thread that still has
/// work, the line of every stream at that thread's `s`-th loop iteration.
pub fn trace_kernel(
    model: &AddressMapModel,
    desc: &KernelDescriptor,
    layouts: &LayoutSet,
    threads: usize,
    schedule: Schedule,
    step_limit: Option<usize>,
) -> Result<AccessTrace, MapError> {
    schedule.check(threads)?;
    desc.validate().map_err(|e| MapError::Descriptor(e.to_string()))?;
    for s in &desc.streams {
        let geom = layouts.arrays.get(s.array).ok_or_else(|| {
            MapError::Descriptor(format!(
                "stream refers to array {} but only {} layouts given",
                s.array,
                layouts.arrays.len()
            ))
        })?;
        if !geom.fits(&desc.space) {
            return Err(MapError::Descriptor(format!(
                "layout of array {:?} does not fit the {} loop nest",
                desc.arrays[s.array], desc.name
            )));
        }
    }

    let space = desc.space;
    let outer = space.outer_len();
    let inner = space.inner_len();
    let counts: Vec<usize> = (0..threads)
        .map(|p| schedule.count(p, outer, threads) * inner)
        .collect();
    let mut steps = counts.iter().copied().max().unwrap_or(0);
    if let Some(limit) = step_limit {
        steps = steps.min(limit);
    }

    let mut trace = Vec::with_capacity(steps);
    for s in 0..steps {
        let mut records = Vec::with_capacity(threads * desc.streams.len());
        for (p, &count) in counts.iter().enumerate() {
            if s >= count {
                continue;
            }
            let o = schedule
                .nth(p, s / inner, outer, threads)
                .expect("iteration within the thread's count");
            let point = space.point(o, s % inner);
            for (si, stream) in desc.streams.iter().enumerate() {
                let q = [0, 1, 2].map(|d| point[d] + stream.displacement[d]);
                let addr = layouts.arrays[stream.array]
                    .address(q, stream.component)
                    .ok_or_else(|| {
                        MapError::Descriptor(format!(
                            "stream {si} of {} leaves array {:?} at {q:?}",
                            desc.name, desc.arrays[stream.array]
                        ))
                    })?;
                records.push(AccessRecord {
                    thread: p as u32,
                    stream: si as u32,
                    line: model.line_of(addr),
                    access: stream.access,
                });
            }
        }
        trace.push(records);
    }

    Ok(AccessTrace {
        model: model.clone(),
        threads,
        streams: desc.streams.len(),
        steps: trace,
    })
}
