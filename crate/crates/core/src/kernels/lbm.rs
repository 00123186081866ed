//! D3Q19 lattice-Boltzmann push kernel on two toggle grids.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::KernelError;
use crate::array::{Element, SegmentedArray};
use crate::layout::LayoutPlan;
use crate::schedule::Schedule;

pub const Q: usize = 19;

/// Discrete velocities. Direction 0 is the rest population, 1 is (+1,+1,0)
/// and 18 is (0,-1,-1); every odd direction `v` is followed by its opposite.
pub const VELOCITIES: [[isize; 3]; Q] = [
    [0, 0, 0],
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 0, 1],
    [-1, 0, -1],
    [1, 0, -1],
    [-1, 0, 1],
    [0, 1, -1],
    [0, -1, 1],
    [0, 1, 1],
    [0, -1, -1],
];

const W_REST: f64 = 1.0 / 3.0;
const W_AXIS: f64 = 1.0 / 18.0;
const W_DIAG: f64 = 1.0 / 36.0;

pub const WEIGHTS: [f64; Q] = {
    let mut w = [0.0; Q];
    let mut v = 0;
    while v < Q {
        let c = VELOCITIES[v];
        let speed = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        w[v] = match speed {
            0 => W_REST,
            1 => W_AXIS,
            _ => W_DIAG,
        };
        v += 1;
    }
    w
};

/// Arithmetic needed by the collision operator.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn lit(v: f64) -> Self;
}

/// Storable lattice precision.
pub trait Real: Scalar + Element {
    fn to_f64(self) -> f64;
}

impl Scalar for f64 {
    fn lit(v: f64) -> Self {
        v
    }
}

impl Real for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn lit(v: f64) -> Self {
        v as f32
    }
}

impl Real for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// BGK collision of one cell with relaxation rate `omega`.
///
/// Opposite directions share the symmetric part of their equilibrium, and
/// `omega * rho * w` is folded into one factor per weight class.
pub fn collide<S: Scalar>(f: &[S; Q], omega: S) -> [S; Q] {
    let rho = f[1..].iter().fold(f[0], |acc, &x| acc + x);
    let jx = (f[1] + f[3] + f[5] + f[11] + f[13]) - (f[2] + f[4] + f[6] + f[12] + f[14]);
    let jy = (f[1] + f[4] + f[7] + f[15] + f[17]) - (f[2] + f[3] + f[8] + f[16] + f[18]);
    let jz = (f[9] + f[11] + f[14] + f[16] + f[17]) - (f[10] + f[12] + f[13] + f[15] + f[18]);
    let inv_rho = S::lit(1.0) / rho;
    let (ux, uy, uz) = (jx * inv_rho, jy * inv_rho, jz * inv_rho);
    let usq = ux * ux + uy * uy + uz * uz;
    let base = S::lit(1.0) - S::lit(1.5) * usq;

    let keep = S::lit(1.0) - omega;
    let orho = omega * rho;
    let w_rest = orho * S::lit(W_REST);
    let w_axis = orho * S::lit(W_AXIS);
    let w_diag = orho * S::lit(W_DIAG);

    let mut out = [S::lit(0.0); Q];
    out[0] = keep * f[0] + w_rest * base;
    let mut pair = |v: usize, cu: S, w: S| {
        let odd = S::lit(3.0) * cu;
        let even = base + S::lit(4.5) * cu * cu;
        out[v] = keep * f[v] + w * (even + odd);
        out[v + 1] = keep * f[v + 1] + w * (even - odd);
    };
    pair(1, ux + uy, w_diag);
    pair(3, ux - uy, w_diag);
    pair(5, ux, w_axis);
    pair(7, uy, w_axis);
    pair(9, uz, w_axis);
    pair(11, ux + uz, w_diag);
    pair(13, ux - uz, w_diag);
    pair(15, uy - uz, w_diag);
    pair(17, uy + uz, w_diag);
    out
}

thread_local! {
    static FLOPS: Cell<u64> = const { Cell::new(0) };
}

/// Scalar that counts the arithmetic performed on it.
#[derive(Debug, Clone, Copy)]
struct Counted(f64);

macro_rules! counted_op {
    ($tr:ident, $f:ident, $op:tt) => {
        #[allow(clippy::suspicious_arithmetic_impl)]
        impl $tr for Counted {
            type Output = Counted;
            fn $f(self, rhs: Counted) -> Counted {
                FLOPS.with(|c| c.set(c.get() + 1));
                Counted(self.0 $op rhs.0)
            }
        }
    };
}

counted_op!(Add, add, +);
counted_op!(Sub, sub, -);
counted_op!(Mul, mul, *);
counted_op!(Div, div, /);

impl Scalar for Counted {
    fn lit(v: f64) -> Self {
        Counted(v)
    }
}

/// Floating-point operations of one [`collide`] call, obtained by running it.
pub fn collision_flops() -> u32 {
    FLOPS.with(|c| c.set(0));
    let f = [Counted(1.0 / Q as f64); Q];
    let _ = collide(&f, Counted(1.0));
    FLOPS.with(|c| c.get()) as u32
}

/// Order of the four array indices in memory, fastest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LbmLayout {
    /// `f(x, y, z, v)`: one unit-stride stream per distribution.
    #[default]
    Ijkv,
    /// `f(x, v, y, z)`: the 19 distributions of a row are adjacent.
    Ivjk,
}

impl fmt::Display for LbmLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LbmLayout::Ijkv => "ijkv",
            LbmLayout::Ivjk => "ivjk",
        })
    }
}

impl FromStr for LbmLayout {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ijkv" => Ok(LbmLayout::Ijkv),
            "ivjk" => Ok(LbmLayout::Ivjk),
            other => Err(KernelError::InvalidArgument(format!("unknown lattice layout {other:?}"))),
        }
    }
}

/// Index arithmetic of a haloed `(n+2)^3` lattice whose first dimension may
/// be padded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeGeometry {
    pub n: usize,
    pub pad_dim1: usize,
    pub layout: LbmLayout,
    strides: [usize; 4],
}

impl LatticeGeometry {
    pub fn new(n: usize, pad_dim1: usize, layout: LbmLayout) -> Self {
        let nx = n + 2 + pad_dim1;
        let ny = n + 2;
        let nz = n + 2;
        // strides of x, y, z, v
        let strides = match layout {
            LbmLayout::Ijkv => [1, nx, nx * ny, nx * ny * nz],
            LbmLayout::Ivjk => [1, nx * Q, nx * Q * ny, nx],
        };
        Self {
            n,
            pad_dim1,
            layout,
            strides,
        }
    }

    /// Elements per grid, padding included.
    pub fn elements(&self) -> usize {
        (self.n + 2 + self.pad_dim1) * (self.n + 2) * (self.n + 2) * Q
    }

    /// Element index of population `v` at `(x, y, z)`; coordinates include
    /// the halo, so `0..=n+1` is valid.
    pub fn index(&self, x: usize, y: usize, z: usize, v: usize) -> usize {
        let [sx, sy, sz, sv] = self.strides;
        x * sx + y * sy + z * sz + v * sv
    }

    pub fn contains(&self, p: [isize; 3]) -> bool {
        let hi = self.n as isize + 1;
        (0..=hi + self.pad_dim1 as isize).contains(&p[0])
            && (0..=hi).contains(&p[1])
            && (0..=hi).contains(&p[2])
    }

    /// Index displacement of a neighbour step plus a change of population.
    fn offset(&self, c: [isize; 3], v: usize) -> isize {
        let [sx, sy, sz, sv] = self.strides.map(|s| s as isize);
        c[0] * sx + c[1] * sy + c[2] * sz + v as isize * sv
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbmConfig {
    /// Interior edge length of the cube.
    pub n: usize,
    pub layout: LbmLayout,
    /// Extra elements appended to the first dimension.
    pub pad_dim1: usize,
    /// Relaxation time; `f64::INFINITY` turns collisions off.
    pub tau: f64,
    pub rho0: f64,
    pub base_alignment: usize,
}

impl Default for LbmConfig {
    fn default() -> Self {
        Self {
            n: 16,
            layout: LbmLayout::Ijkv,
            pad_dim1: 0,
            tau: 1.0,
            rho0: 1.0,
            base_alignment: 4096,
        }
    }
}

/// Two toggle grids of D3Q19 populations plus a fluid mask.
pub struct LbmLattice<T: Real = f64> {
    geom: LatticeGeometry,
    grids: [SegmentedArray<T>; 2],
    current: usize,
    fluid: Vec<bool>,
    omega: T,
}

impl<T: Real> LbmLattice<T> {
    /// All cells fluid, every population (halo included) at rest equilibrium.
    pub fn new(config: &LbmConfig) -> Result<Self, KernelError> {
        if config.n == 0 {
            return Err(KernelError::DomainTooSmall { n: 0, min: 1 });
        }
        if config.tau.partial_cmp(&0.5) != Some(std::cmp::Ordering::Greater) {
            return Err(KernelError::InvalidArgument(format!(
                "relaxation time must exceed 0.5, got {}",
                config.tau
            )));
        }
        let geom = LatticeGeometry::new(config.n, config.pad_dim1, config.layout);
        let alloc = || {
            let plan = LayoutPlan::contiguous(geom.elements(), std::mem::size_of::<T>())?;
            SegmentedArray::<T>::allocate(plan, config.base_alignment)
        };
        let mut lattice = Self {
            geom,
            grids: [alloc()?, alloc()?],
            current: 0,
            fluid: vec![true; config.n.pow(3)],
            omega: T::lit(1.0 / config.tau),
        };
        for g in 0..2 {
            lattice.fill_grid(g, |_, _, _, v| config.rho0 * WEIGHTS[v]);
        }
        Ok(lattice)
    }

    fn fill_grid(&mut self, grid: usize, mut value: impl FnMut(usize, usize, usize, usize) -> f64) {
        let geom = self.geom;
        let hi = geom.n + 1;
        let data = self.grids[grid].segment_mut(0).expect("one segment");
        for z in 0..=hi {
            for y in 0..=hi {
                for x in 0..=hi {
                    for v in 0..Q {
                        data[geom.index(x, y, z, v)] = T::lit(value(x, y, z, v));
                    }
                }
            }
        }
    }

    /// Perturbs every population of the current grid by a relative amount
    /// drawn uniformly from `[-amplitude/2, amplitude/2)`. The draw order is
    /// logical, so lattices of different layouts receive equal values.
    pub fn randomize(&mut self, seed: u64, amplitude: f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cur = self.current;
        let geom = self.geom;
        let old = self.grids[cur].to_vec();
        self.fill_grid(cur, |x, y, z, v| {
            let r: f64 = rng.gen();
            old[geom.index(x, y, z, v)].to_f64() * (1.0 + amplitude * (r - 0.5))
        });
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geom
    }

    pub fn n(&self) -> usize {
        self.geom.n
    }

    /// Grid holding the latest populations.
    pub fn current(&self) -> usize {
        self.current
    }

    pub fn grid(&self, g: usize) -> &SegmentedArray<T> {
        &self.grids[g]
    }

    fn mask_index(&self, x: usize, y: usize, z: usize) -> usize {
        let n = self.geom.n;
        (x - 1) + n * ((y - 1) + n * (z - 1))
    }

    /// Marks interior cell `(x, y, z)` (1-based) as fluid or solid.
    pub fn set_fluid(&mut self, x: usize, y: usize, z: usize, fluid: bool) {
        let i = self.mask_index(x, y, z);
        self.fluid[i] = fluid;
    }

    pub fn is_fluid(&self, x: usize, y: usize, z: usize) -> bool {
        self.fluid[self.mask_index(x, y, z)]
    }

    pub fn fluid_cells(&self) -> usize {
        self.fluid.iter().filter(|&&f| f).count()
    }

    pub fn get(&self, grid: usize, x: usize, y: usize, z: usize, v: usize) -> T {
        self.grids[grid].segment(0).expect("one segment")[self.geom.index(x, y, z, v)]
    }

    pub fn set(&mut self, grid: usize, x: usize, y: usize, z: usize, v: usize, value: T) {
        let i = self.geom.index(x, y, z, v);
        self.grids[grid].segment_mut(0).expect("one segment")[i] = value;
    }

    /// Address of a population, for tracing.
    pub fn element_address(&self, grid: usize, x: usize, y: usize, z: usize, v: usize) -> usize {
        self.grids[grid].base_address() + self.geom.index(x, y, z, v) * std::mem::size_of::<T>()
    }

    /// Populations of `grid` in logical `(z, y, x, v)` order, halo included,
    /// independent of the memory layout.
    pub fn snapshot(&self, grid: usize) -> Vec<T> {
        let hi = self.geom.n + 1;
        let data = self.grids[grid].segment(0).expect("one segment");
        let mut out = Vec::with_capacity((hi + 1).pow(3) * Q);
        for z in 0..=hi {
            for y in 0..=hi {
                for x in 0..=hi {
                    for v in 0..Q {
                        out.push(data[self.geom.index(x, y, z, v)]);
                    }
                }
            }
        }
        out
    }

    /// One collide-and-push sweep from the current grid into the other one,
    /// followed by the toggle swap. Returns the wall time of the sweep.
    pub fn step(&mut self, threads: usize, schedule: Schedule, coalesce: bool) -> Result<f64, KernelError> {
        schedule.check(threads)?;
        let geom = self.geom;
        let n = geom.n;
        let omega = self.omega;
        let cur = self.current;
        let [g0, g1] = &mut self.grids;
        let (src, dst) = if cur == 0 { (&*g0, g1) } else { (&*g1, g0) };
        let src = src.segment(0).expect("one segment");
        let dst = dst.shared();
        let fluid = &self.fluid;

        let reads: [usize; Q] = std::array::from_fn(|v| geom.offset([0; 3], v) as usize);
        let writes: [isize; Q] = std::array::from_fn(|v| geom.offset(VELOCITIES[v], v));
        let outer = if coalesce { n * n } else { n };

        let sweep_rows = |z: usize, ys: std::ops::Range<usize>| {
            for y in ys {
                for x in 1..=n {
                    if !fluid[(x - 1) + n * ((y - 1) + n * (z - 1))] {
                        continue;
                    }
                    let cell = geom.index(x, y, z, 0);
                    let f: [T; Q] = std::array::from_fn(|v| src[cell + reads[v]]);
                    let post = collide(&f, omega);
                    for v in 0..Q {
                        let target = (cell as isize + writes[v]) as usize;
                        // SAFETY: population v of a cell is pushed by exactly
                        // one source cell, so no two writers share an element,
                        // and the destination grid is not read during the sweep.
                        unsafe { dst.element_ptr(0, target).write(post[v]) };
                    }
                }
            }
        };
        let worker = |p: usize| {
            for range in schedule.ranges(p, outer, threads) {
                for o in range {
                    if coalesce {
                        let (z, y) = (o / n + 1, o % n + 1);
                        sweep_rows(z, y..y + 1);
                    } else {
                        sweep_rows(o + 1, 1..n + 1);
                    }
                }
            }
        };
        let elapsed = run_workers(threads, &worker);
        self.current = 1 - cur;
        Ok(elapsed)
    }
}

/// Runs `worker(p)` for `p in 0..threads` concurrently and returns the wall
/// time from launch to the final join.
pub(crate) fn run_workers<F: Fn(usize) + Sync>(threads: usize, worker: &F) -> f64 {
    let start = Instant::now();
    std::thread::scope(|s| {
        for p in 1..threads {
            s.spawn(move || worker(p));
        }
        worker(0);
    });
    start.elapsed().as_secs_f64()
}
