//! Timed kernels against the nested-loop reference oracle.

use interleave::kernels::lbm::{LbmConfig, LbmLattice, LbmLayout, Q};
use interleave::kernels::{
    reference_oracle, stream_add, stream_copy, stream_scale, stream_triad, vector_triad, vector_triad_plain,
    Jacobi2DGrid, OracleInputs,
};
use interleave::{partition, LayoutParams, Schedule, SegmentedArray};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THREADS: [usize; 4] = [1, 2, 4, 8];

fn schedules() -> [Schedule; 3] {
    [Schedule::Static, Schedule::Chunked(1), Schedule::Chunked(5)]
}

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// A segmented copy of `values` with staggered, unaligned segments.
fn segmented(values: &[f64], segments: usize, k: usize) -> SegmentedArray {
    let p = LayoutParams::default()
        .with_segment_alignment(512)
        .with_shift(128)
        .with_offset(8 * (k + 1));
    let mut a = SegmentedArray::new(&p, &partition(values.len(), segments).unwrap()).unwrap();
    a.copy_from_slice(values).unwrap();
    a
}

fn oracle(kernel: &str, arrays: Vec<Vec<f64>>, scalar: f64) -> Vec<f64> {
    reference_oracle(
        kernel,
        &OracleInputs {
            arrays,
            scalar,
            ..Default::default()
        },
    )
    .unwrap()
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[test]
fn streaming_kernels_match_oracle() {
    let s = 1.75;
    for n in [1usize, 17, 1000, 4096] {
        let (va, vb, vc, vd) = (random(n, 1), random(n, 2), random(n, 3), random(n, 4));
        let want_copy = oracle("copy", vec![va.clone()], 0.0);
        let want_scale = oracle("scale", vec![vc.clone()], s);
        let want_add = oracle("add", vec![va.clone(), vb.clone()], 0.0);
        let want_triad = oracle("triad", vec![vb.clone(), vc.clone()], s);
        let want_vtriad = oracle("vtriad", vec![vb.clone(), vc.clone(), vd.clone()], 0.0);
        for threads in THREADS {
            for schedule in schedules() {
                for segments in [1, threads.min(n), 3.min(n)] {
                    let ctx = format!("n={n} t={threads} {schedule} segments={segments}");
                    let a = segmented(&va, segments, 0);
                    let b = segmented(&vb, segments, 1);
                    let c = segmented(&vc, segments, 2);
                    let d = segmented(&vd, segments, 3);

                    let mut out = segmented(&vec![0.0; n], segments, 4);
                    stream_copy(&mut out, &a, threads, schedule).unwrap();
                    assert!(same_bits(&out.to_vec(), &want_copy), "copy {ctx}");
                    stream_scale(&mut out, &c, s, threads, schedule).unwrap();
                    assert!(same_bits(&out.to_vec(), &want_scale), "scale {ctx}");
                    stream_add(&mut out, &a, &b, threads, schedule).unwrap();
                    assert!(same_bits(&out.to_vec(), &want_add), "add {ctx}");
                    stream_triad(&mut out, &b, &c, s, threads, schedule).unwrap();
                    assert!(same_bits(&out.to_vec(), &want_triad), "triad {ctx}");
                    vector_triad(&mut out, &b, &c, &d, threads, schedule).unwrap();
                    assert!(same_bits(&out.to_vec(), &want_vtriad), "vtriad {ctx}");

                    let mut plain = vec![0.0; n];
                    vector_triad_plain(&mut plain, &vb, &vc, &vd, threads, schedule).unwrap();
                    assert!(same_bits(&plain, &want_vtriad), "plain vtriad {ctx}");
                }
            }
        }
    }
}

#[test]
fn length_mismatch_is_rejected() {
    let a = segmented(&random(10, 1), 2, 0);
    let mut c = segmented(&random(11, 1), 2, 1);
    assert!(stream_copy(&mut c, &a, 1, Schedule::Static).is_err());
}

#[test]
fn jacobi_matches_oracle() {
    for n in [3usize, 4, 9, 33, 64] {
        let src = random(n * n, n as u64);
        let want = reference_oracle(
            "jacobi2d",
            &OracleInputs {
                arrays: vec![src.clone()],
                n,
                ..Default::default()
            },
        )
        .unwrap();
        for threads in THREADS {
            for schedule in schedules() {
                for (sa, shift) in [(0, 0), (512, 128), (4096, 8)] {
                    let p = LayoutParams::default().with_segment_alignment(sa).with_shift(shift);
                    let mut grid = Jacobi2DGrid::new(n, &p, &p.with_offset(64)).unwrap();
                    grid.source_mut().copy_from_slice(&src).unwrap();
                    grid.sweep(threads, schedule).unwrap();
                    assert!(
                        same_bits(&grid.dest().to_vec(), &want),
                        "n={n} t={threads} {schedule} align={sa}"
                    );
                }
            }
        }
    }
}

fn random_lattice(n: usize, layout: LbmLayout, pad: usize, seed: u64) -> LbmLattice {
    let cfg = LbmConfig {
        n,
        layout,
        pad_dim1: pad,
        tau: 0.8,
        ..LbmConfig::default()
    };
    let mut lat = LbmLattice::new(&cfg).unwrap();
    lat.randomize(seed, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1);
    for z in 1..=n {
        for y in 1..=n {
            for x in 1..=n {
                lat.set_fluid(x, y, z, rng.gen_bool(0.85));
            }
        }
    }
    lat
}

fn mask(lat: &LbmLattice) -> Vec<bool> {
    let n = lat.n();
    let mut m = Vec::with_capacity(n * n * n);
    for z in 1..=n {
        for y in 1..=n {
            for x in 1..=n {
                m.push(lat.is_fluid(x, y, z));
            }
        }
    }
    m
}

fn assert_close(got: &[f64], want: &[f64], rel: f64, ctx: &str) {
    assert_eq!(got.len(), want.len(), "{ctx}");
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        let scale = w.abs().max(1e-300);
        assert!((g - w).abs() <= rel * scale, "{ctx}: element {i}: {g} vs {w}");
    }
}

#[test]
fn lbm_layouts_agree_with_each_other_and_the_oracle() {
    let n = 8;
    let steps = 10;
    let start = random_lattice(n, LbmLayout::Ijkv, 0, 42);
    let want = reference_oracle(
        "lbm",
        &OracleInputs {
            arrays: vec![start.snapshot(0), start.snapshot(1)],
            n,
            fluid: mask(&start),
            omega: 1.0 / 0.8,
            steps,
            ..Default::default()
        },
    )
    .unwrap();

    let mut ijkv = random_lattice(n, LbmLayout::Ijkv, 0, 42);
    let mut ivjk = random_lattice(n, LbmLayout::Ivjk, 3, 42);
    for _ in 0..steps {
        ijkv.step(1, Schedule::Static, false).unwrap();
        ivjk.step(1, Schedule::Static, false).unwrap();
    }
    let a = ijkv.snapshot(ijkv.current());
    let b = ivjk.snapshot(ivjk.current());
    // the arithmetic per cell is identical, so the layouts agree exactly
    assert!(same_bits(&a, &b));
    assert_close(&a, &want, 1e-13, "ijkv vs oracle");
}

#[test]
fn lbm_threads_schedules_and_coalescing_are_bitwise_neutral() {
    let n = 7;
    let steps = 3;
    let mut base = random_lattice(n, LbmLayout::Ijkv, 0, 9);
    for _ in 0..steps {
        base.step(1, Schedule::Static, false).unwrap();
    }
    let want = base.snapshot(base.current());
    for layout in [LbmLayout::Ijkv, LbmLayout::Ivjk] {
        for threads in THREADS {
            for schedule in schedules() {
                for coalesce in [false, true] {
                    let mut lat = random_lattice(n, layout, 0, 9);
                    for _ in 0..steps {
                        lat.step(threads, schedule, coalesce).unwrap();
                    }
                    assert!(
                        same_bits(&lat.snapshot(lat.current()), &want),
                        "{layout} t={threads} {schedule} coalesce={coalesce}"
                    );
                }
            }
        }
    }
}

#[test]
fn lbm_single_cell_propagation_without_collision() {
    // tau = infinity leaves populations unchanged, so each one just moves
    // to the neighbour along its velocity
    let cfg = LbmConfig {
        n: 2,
        tau: f64::INFINITY,
        ..LbmConfig::default()
    };
    let mut lat: LbmLattice = LbmLattice::new(&cfg).unwrap();
    for z in 1..=2 {
        for y in 1..=2 {
            for x in 1..=2 {
                lat.set_fluid(x, y, z, (x, y, z) == (1, 1, 1));
            }
        }
    }
    for v in 0..Q {
        lat.set(0, 1, 1, 1, v, 100.0 + v as f64);
    }
    let before = lat.snapshot(0);
    let oracle = reference_oracle(
        "lbm",
        &OracleInputs {
            arrays: vec![before.clone(), lat.snapshot(1)],
            n: 2,
            fluid: mask(&lat),
            omega: 0.0,
            steps: 1,
            ..Default::default()
        },
    )
    .unwrap();
    lat.step(1, Schedule::Static, false).unwrap();
    assert_eq!(lat.current(), 1);
    assert!(same_bits(&lat.snapshot(1), &oracle));
    for (v, c) in interleave::kernels::lbm::VELOCITIES.iter().enumerate() {
        let [x, y, z] = c.map(|d| (1 + d) as usize);
        assert_eq!(lat.get(1, x, y, z, v), 100.0 + v as f64);
    }
}

#[test]
fn all_solid_leaves_target_grid_unchanged() {
    let mut lat = random_lattice(4, LbmLayout::Ivjk, 0, 5);
    for z in 1..=4 {
        for y in 1..=4 {
            for x in 1..=4 {
                lat.set_fluid(x, y, z, false);
            }
        }
    }
    let before = lat.snapshot(1);
    lat.step(4, Schedule::Chunked(1), true).unwrap();
    assert!(same_bits(&lat.snapshot(1), &before));
}
