use interleave::controller::{balance, trace_kernel, ArrayGeometry, LayoutSet, VIRTUAL_BASE};
use interleave::kernels::lbm::{LbmConfig, LbmLattice, Real};
use interleave::kernels::{
    predicted_performance, stream_add, stream_copy, stream_scale, stream_triad, traffic_model, vector_triad,
    Jacobi2DGrid, LatticeGeometry, Rate,
};
use interleave::{build_layout, partition, BalanceScore, Schedule, SegmentedArray};

use crate::config::{BenchConfig, KernelKind, Mode, Placement};
use crate::timing::{time_reps, Timing};
use crate::BenchError;

/// One measured, analysed or predicted point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub kernel: KernelKind,
    pub n: usize,
    pub threads: usize,
    pub schedule: Schedule,
    pub offsets: Vec<usize>,
    pub seg_align: usize,
    pub shift: usize,
    pub time_best_s: Option<f64>,
    pub time_median_s: Option<f64>,
    /// Bandwidth counting every store once.
    pub gbs_reported: Option<f64>,
    /// Bandwidth including the read for ownership of every store.
    pub gbs_actual: Option<f64>,
    pub mlups: Option<f64>,
    pub balance_score: Option<f64>,
}

impl BenchRecord {
    fn echo(cfg: &BenchConfig) -> Self {
        Self {
            kernel: cfg.kernel,
            n: cfg.n,
            threads: cfg.threads,
            schedule: cfg.schedule,
            offsets: cfg.offsets.clone(),
            seg_align: cfg.segment_alignment,
            shift: cfg.shift,
            time_best_s: None,
            time_median_s: None,
            gbs_reported: None,
            gbs_actual: None,
            mlups: None,
            balance_score: None,
        }
    }
}

pub fn run(cfg: &BenchConfig) -> Result<BenchRecord, BenchError> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Measure => measure(cfg),
        Mode::Analyze => {
            let score = analyze(cfg)?;
            Ok(BenchRecord {
                balance_score: Some(score.score_f64()),
                ..BenchRecord::echo(cfg)
            })
        }
        Mode::Predict => predict(cfg),
    }
}

/// Lattice sizes whose padded first dimension is a multiple of 64 elements,
/// where the populations of neighbouring cells alias in the cache.
pub fn thrashing_candidate(n: usize, pad_dim1: usize) -> bool {
    (n + 2 + pad_dim1).is_multiple_of(64)
}

/// Places the arrays of `cfg` in a virtual address range, as the timed
/// path would allocate them.
pub fn analysis_layouts(cfg: &BenchConfig) -> Result<LayoutSet, BenchError> {
    let desc = cfg.descriptor();
    let count = desc.arrays.len();
    let align = cfg.base_alignment.max(cfg.segment_alignment);
    let mut geoms = Vec::with_capacity(count);
    match cfg.kernel {
        k if k.is_streaming() => {
            if cfg.placement == Placement::Common {
                let offset = cfg.offsets.first().copied().unwrap_or(0);
                return Ok(LayoutSet::common_block(count, cfg.n, 8, offset, VIRTUAL_BASE)?);
            }
            let lengths = partition(cfg.n, cfg.segment_count())?;
            for k in 0..count {
                let plan = build_layout(&cfg.layout_params(cfg.array_offset(k, count)?), &lengths)?;
                geoms.push(ArrayGeometry::Linear { plan, base: 0 });
            }
        }
        KernelKind::Jacobi2D => {
            let rows = vec![cfg.n; cfg.n];
            for k in 0..count {
                let plan = build_layout(&cfg.layout_params(cfg.array_offset(k, count)?), &rows)?;
                geoms.push(ArrayGeometry::Rows { plan, base: 0 });
            }
        }
        _ => {
            let geometry = LatticeGeometry::new(cfg.n, cfg.pad_dim1, cfg.lbm_layout);
            for _ in 0..count {
                geoms.push(ArrayGeometry::Lattice {
                    geometry,
                    element_size: cfg.lbm_element_size,
                    base: 0,
                });
            }
            let mut set = LayoutSet::packed_aligned(geoms, align, VIRTUAL_BASE)?;
            for (k, g) in set.arrays.iter_mut().enumerate() {
                if let ArrayGeometry::Lattice { base, .. } = g {
                    *base += cfg.array_offset(k, count)? as u64;
                }
            }
            return Ok(set);
        }
    }
    Ok(LayoutSet::packed_aligned(geoms, align, VIRTUAL_BASE)?)
}

/// Controller balance of the configured kernel and layout.
pub fn analyze(cfg: &BenchConfig) -> Result<BalanceScore, BenchError> {
    let layouts = analysis_layouts(cfg)?;
    let trace = trace_kernel(
        &cfg.model,
        &cfg.descriptor(),
        &layouts,
        cfg.threads,
        cfg.schedule,
        cfg.step_limit,
    )?;
    Ok(balance(&trace)?)
}

fn predict(cfg: &BenchConfig) -> Result<BenchRecord, BenchError> {
    let bandwidth = cfg
        .bandwidth
        .ok_or_else(|| BenchError::Config("predict mode needs a bandwidth".into()))?;
    let mut rec = BenchRecord::echo(cfg);
    match predicted_performance(&cfg.descriptor(), bandwidth)? {
        Rate::GigabytesPerSecond(r) => {
            rec.gbs_reported = Some(r);
            rec.gbs_actual = Some(bandwidth / 1e9);
        }
        Rate::MlupsPerSecond(r) => rec.mlups = Some(r),
    }
    Ok(rec)
}

fn measure(cfg: &BenchConfig) -> Result<BenchRecord, BenchError> {
    let timing = match cfg.kernel {
        k if k.is_streaming() => measure_streaming(cfg)?,
        KernelKind::Jacobi2D => measure_jacobi(cfg)?,
        _ if cfg.lbm_element_size == 4 => measure_lbm::<f32>(cfg)?,
        _ => measure_lbm::<f64>(cfg)?,
    };
    Ok(record_from_timing(cfg, &timing))
}

/// Derives the rate columns from timed sweeps.
pub fn record_from_timing(cfg: &BenchConfig, timing: &Timing) -> BenchRecord {
    let desc = cfg.descriptor();
    let traffic = traffic_model(&desc);
    let units = desc.space.iterations() as f64;
    let best = timing.best();
    let mut rec = BenchRecord {
        time_best_s: Some(best),
        time_median_s: Some(timing.median()),
        ..BenchRecord::echo(cfg)
    };
    if cfg.kernel.is_streaming() {
        rec.gbs_reported = Some(units * traffic.bytes_without_rfo as f64 / best / 1e9);
        rec.gbs_actual = Some(units * traffic.bytes_with_rfo as f64 / best / 1e9);
    } else {
        rec.mlups = Some(units / best / 1e6);
    }
    rec
}

fn measure_streaming(cfg: &BenchConfig) -> Result<Timing, BenchError> {
    let count = cfg.descriptor().arrays.len();
    let lengths = partition(cfg.n, cfg.segment_count())?;
    let mut arrays = Vec::with_capacity(count);
    for k in 0..count {
        let mut a = SegmentedArray::new(&cfg.layout_params(cfg.array_offset(k, count)?), &lengths)?;
        a.fill(1.0 + k as f64);
        arrays.push(a);
    }
    let out = match cfg.kernel {
        KernelKind::Copy | KernelKind::Add => 2,
        KernelKind::Scale => 1,
        _ => 0,
    };
    let (head, tail) = arrays.split_at_mut(out);
    let (dst, tail) = tail.split_first_mut().expect("output array exists");
    let ins: Vec<&SegmentedArray> = head.iter().chain(tail.iter()).collect();
    let (t, sched, s) = (cfg.threads, cfg.schedule, 3.0);
    let timing = time_reps(cfg.reps, || match cfg.kernel {
        KernelKind::Copy => stream_copy(dst, ins[0], t, sched),
        KernelKind::Scale => stream_scale(dst, ins[1], s, t, sched),
        KernelKind::Add => stream_add(dst, ins[0], ins[1], t, sched),
        KernelKind::Triad => stream_triad(dst, ins[0], ins[1], s, t, sched),
        _ => vector_triad(dst, ins[0], ins[1], ins[2], t, sched),
    })?;
    Ok(timing)
}

fn measure_jacobi(cfg: &BenchConfig) -> Result<Timing, BenchError> {
    let dest = cfg.layout_params(cfg.array_offset(0, 2)?);
    let source = cfg.layout_params(cfg.array_offset(1, 2)?);
    let mut grid = Jacobi2DGrid::new(cfg.n, &source, &dest)?;
    grid.source_mut().fill(1.0);
    Ok(time_reps(cfg.reps, || grid.sweep(cfg.threads, cfg.schedule))?)
}

fn measure_lbm<T: Real>(cfg: &BenchConfig) -> Result<Timing, BenchError> {
    if cfg.offsets.iter().any(|&o| o != 0) {
        return Err(BenchError::Config(
            "array offsets are only modelled for the lattice kernel, not measured".into(),
        ));
    }
    let lbm = LbmConfig {
        n: cfg.n,
        layout: cfg.lbm_layout,
        pad_dim1: cfg.pad_dim1,
        base_alignment: cfg.base_alignment,
        ..LbmConfig::default()
    };
    let mut lattice = LbmLattice::<T>::new(&lbm)?;
    Ok(time_reps(cfg.reps, || lattice.step(cfg.threads, cfg.schedule, cfg.coalesce))?)
}
