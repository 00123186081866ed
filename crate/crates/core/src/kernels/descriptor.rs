//! Declarative stream structure of the benchmark kernels.
//!
//! A [`KernelDescriptor`] lists which arrays a loop body touches, in which
//! direction and at which displacement from the current iteration point. The
//! traffic model and the controller traces are both derived from it, so no
//! byte count is written down per kernel.

use num_rational::Ratio;

use super::lbm::{self, VELOCITIES};
use super::KernelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Access {
    Read,
    Write,
}

/// Loop nest of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterSpace {
    /// `for i in 0..n`.
    Linear { n: usize },
    /// `for i in 1..n-1 { for j in 1..n-1 }` over an `n x n` grid; the
    /// parallel loop runs over rows.
    Grid2D { n: usize },
    /// `for z in 1..=n { for y in 1..=n { for x in 1..=n } }` over the interior
    /// of a haloed cube. With `coalesce` the `z` and `y` loops are fused into
    /// one parallel loop of `n * n` iterations.
    Lattice3D { n: usize, coalesce: bool },
}

impl IterSpace {
    /// Trip count of the parallel (outer) loop.
    pub fn outer_len(&self) -> usize {
        match *self {
            IterSpace::Linear { n } => n,
            IterSpace::Grid2D { n } => n.saturating_sub(2),
            IterSpace::Lattice3D { n, coalesce: false } => n,
            IterSpace::Lattice3D { n, coalesce: true } => n * n,
        }
    }

    /// Iterations executed serially per outer iteration.
    pub fn inner_len(&self) -> usize {
        match *self {
            IterSpace::Linear { .. } => 1,
            IterSpace::Grid2D { n } => n.saturating_sub(2),
            IterSpace::Lattice3D { n, coalesce: false } => n * n,
            IterSpace::Lattice3D { n, coalesce: true } => n,
        }
    }

    pub fn iterations(&self) -> usize {
        self.outer_len() * self.inner_len()
    }

    /// Coordinates of an iteration: `[i, 0, 0]`, `[row, col, 0]` or `[x, y, z]`.
    pub fn point(&self, outer: usize, inner: usize) -> [isize; 3] {
        match *self {
            IterSpace::Linear { .. } => [outer as isize, 0, 0],
            IterSpace::Grid2D { .. } => [outer as isize + 1, inner as isize + 1, 0],
            IterSpace::Lattice3D { n, coalesce: false } => [
                (inner % n) as isize + 1,
                (inner / n) as isize + 1,
                outer as isize + 1,
            ],
            IterSpace::Lattice3D { n, coalesce: true } => [
                inner as isize + 1,
                (outer % n) as isize + 1,
                (outer / n) as isize + 1,
            ],
        }
    }
}

/// One load or store stream of a loop body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSpec {
    /// Index into [`KernelDescriptor::arrays`].
    pub array: usize,
    pub access: Access,
    /// Offset from the iteration point, in the coordinates of the loop nest.
    pub displacement: [isize; 3],
    /// Distribution index for lattice arrays, 0 otherwise.
    pub component: usize,
    /// Served from cache once the kernel is in steady state, so it causes
    /// no memory traffic of its own.
    pub cached: bool,
}

impl StreamSpec {
    pub fn read(array: usize) -> Self {
        Self {
            array,
            access: Access::Read,
            displacement: [0; 3],
            component: 0,
            cached: false,
        }
    }

    pub fn write(array: usize) -> Self {
        Self {
            access: Access::Write,
            ..Self::read(array)
        }
    }

    pub fn at(mut self, displacement: [isize; 3]) -> Self {
        self.displacement = displacement;
        self
    }

    pub fn component(mut self, v: usize) -> Self {
        self.component = v;
        self
    }

    pub fn cached(mut self) -> Self {
        self.cached = true;
        self
    }
}

/// What a kernel's throughput is reported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    GigabytesPerSecond,
    MlupsPerSecond,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelDescriptor {
    pub name: &'static str,
    pub arrays: Vec<&'static str>,
    pub streams: Vec<StreamSpec>,
    pub space: IterSpace,
    /// Floating-point operations per iteration.
    pub flops: u32,
    pub element_size: usize,
    /// Stores miss into the cache and trigger a read for ownership.
    pub write_allocate: bool,
}

impl KernelDescriptor {
    fn streaming(name: &'static str, n: usize, arrays: &[&'static str], streams: Vec<StreamSpec>, flops: u32) -> Self {
        Self {
            name,
            arrays: arrays.to_vec(),
            streams,
            space: IterSpace::Linear { n },
            flops,
            element_size: 8,
            write_allocate: true,
        }
    }

    /// `c = a`
    pub fn copy(n: usize) -> Self {
        Self::streaming("copy", n, &["a", "b", "c"], vec![StreamSpec::read(0), StreamSpec::write(2)], 0)
    }

    /// `b = s * c`
    pub fn scale(n: usize) -> Self {
        Self::streaming("scale", n, &["a", "b", "c"], vec![StreamSpec::read(2), StreamSpec::write(1)], 1)
    }

    /// `c = a + b`
    pub fn add(n: usize) -> Self {
        Self::streaming(
            "add",
            n,
            &["a", "b", "c"],
            vec![StreamSpec::read(0), StreamSpec::read(1), StreamSpec::write(2)],
            1,
        )
    }

    /// `a = b + s * c`
    pub fn triad(n: usize) -> Self {
        Self::streaming(
            "triad",
            n,
            &["a", "b", "c"],
            vec![StreamSpec::read(1), StreamSpec::read(2), StreamSpec::write(0)],
            2,
        )
    }

    /// `a = b + c * d`
    pub fn vector_triad(n: usize) -> Self {
        Self::streaming(
            "vtriad",
            n,
            &["a", "b", "c", "d"],
            vec![
                StreamSpec::read(1),
                StreamSpec::read(2),
                StreamSpec::read(3),
                StreamSpec::write(0),
            ],
            2,
        )
    }

    /// Five-point Jacobi relaxation. Only the leading source row and the
    /// destination row reach memory; the other three operands are reused
    /// from cache when two source rows fit.
    pub fn jacobi2d(n: usize) -> Self {
        Self {
            name: "jacobi2d",
            arrays: vec!["dest", "source"],
            streams: vec![
                StreamSpec::write(0),
                StreamSpec::read(1).at([-1, 0, 0]).cached(),
                StreamSpec::read(1).at([1, 0, 0]),
                StreamSpec::read(1).at([0, -1, 0]).cached(),
                StreamSpec::read(1).at([0, 1, 0]).cached(),
            ],
            space: IterSpace::Grid2D { n },
            flops: 4,
            element_size: 8,
            write_allocate: true,
        }
    }

    /// D3Q19 push kernel: 19 reads from the local cell of the source grid and
    /// 19 writes to the neighbour cells of the destination grid.
    pub fn lbm(n: usize, coalesce: bool, element_size: usize) -> Self {
        let mut streams: Vec<StreamSpec> = (0..lbm::Q).map(|v| StreamSpec::read(0).component(v)).collect();
        streams.extend(
            VELOCITIES
                .iter()
                .enumerate()
                .map(|(v, c)| StreamSpec::write(1).at(*c).component(v)),
        );
        Self {
            name: "lbm",
            arrays: vec!["f_t", "f_tn"],
            streams,
            space: IterSpace::Lattice3D { n, coalesce },
            flops: lbm::collision_flops(),
            element_size,
            write_allocate: true,
        }
    }

    pub fn unit(&self) -> RateUnit {
        match self.space {
            IterSpace::Linear { .. } => RateUnit::GigabytesPerSecond,
            _ => RateUnit::MlupsPerSecond,
        }
    }

    pub fn reads(&self) -> usize {
        self.streams.iter().filter(|s| s.access == Access::Read).count()
    }

    pub fn writes(&self) -> usize {
        self.streams.iter().filter(|s| s.access == Access::Write).count()
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if self.streams.is_empty() {
            return Err(KernelError::Descriptor(format!("{}: no streams", self.name)));
        }
        if !matches!(self.element_size, 4 | 8) {
            return Err(KernelError::Descriptor(format!(
                "{}: unsupported element size {}",
                self.name, self.element_size
            )));
        }
        let lattice = matches!(self.space, IterSpace::Lattice3D { .. });
        for s in &self.streams {
            if s.array >= self.arrays.len() {
                return Err(KernelError::Descriptor(format!(
                    "{}: stream refers to array {} of {}",
                    self.name,
                    s.array,
                    self.arrays.len()
                )));
            }
            if (!lattice && s.component != 0) || s.component >= lbm::Q {
                return Err(KernelError::Descriptor(format!(
                    "{}: component {} not valid here",
                    self.name, s.component
                )));
            }
        }
        Ok(())
    }
}

/// Bytes and flops per loop iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrafficModel {
    /// Memory traffic including the read-for-ownership of every store.
    pub bytes_with_rfo: u64,
    /// Memory traffic as conventionally reported, stores counted once.
    pub bytes_without_rfo: u64,
    /// Every operand access counted, ignoring cache reuse.
    pub application_bytes: u64,
    pub flops: u32,
}

impl TrafficModel {
    /// Actual over reported traffic.
    pub fn rfo_factor(&self) -> Ratio<u64> {
        Ratio::new(self.bytes_with_rfo, self.bytes_without_rfo.max(1))
    }

    fn per_flop(&self, bytes: u64) -> Option<f64> {
        (self.flops > 0).then(|| bytes as f64 / self.flops as f64)
    }

    /// Bytes loaded or stored per flop, ignoring caches.
    pub fn application_balance(&self) -> Option<f64> {
        self.per_flop(self.application_bytes)
    }

    /// Memory bytes per flop without RFO.
    pub fn code_balance(&self) -> Option<f64> {
        self.per_flop(self.bytes_without_rfo)
    }

    /// Memory bytes per flop including RFO.
    pub fn code_balance_rfo(&self) -> Option<f64> {
        self.per_flop(self.bytes_with_rfo)
    }
}

pub fn traffic_model(desc: &KernelDescriptor) -> TrafficModel {
    let es = desc.element_size as u64;
    let memory = desc.streams.iter().filter(|s| !s.cached);
    let (reads, writes) = memory.fold((0u64, 0u64), |(r, w), s| match s.access {
        Access::Read => (r + 1, w),
        Access::Write => (r, w + 1),
    });
    let rfo = if desc.write_allocate { writes } else { 0 };
    TrafficModel {
        bytes_with_rfo: es * (reads + writes + rfo),
        bytes_without_rfo: es * (reads + writes),
        application_bytes: es * desc.streams.len() as u64,
        flops: desc.flops,
    }
}

/// Throughput expected from a memory bandwidth (bytes/s, RFO included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    /// Bandwidth in the reporting convention that ignores RFO.
    GigabytesPerSecond(f64),
    MlupsPerSecond(f64),
}

impl Rate {
    pub fn value(&self) -> f64 {
        match *self {
            Rate::GigabytesPerSecond(v) | Rate::MlupsPerSecond(v) => v,
        }
    }
}

pub fn predicted_performance(desc: &KernelDescriptor, bandwidth: f64) -> Result<Rate, KernelError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(KernelError::InvalidArgument(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let t = traffic_model(desc);
    let per_unit = t.bytes_with_rfo as f64;
    Ok(match desc.unit() {
        RateUnit::GigabytesPerSecond => {
            Rate::GigabytesPerSecond(bandwidth * t.bytes_without_rfo as f64 / per_unit / 1e9)
        }
        RateUnit::MlupsPerSecond => Rate::MlupsPerSecond(bandwidth / per_unit / 1e6),
    })
}
