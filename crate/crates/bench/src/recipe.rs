//! Named layout recipes and the controller behaviour each one must show.

use std::fmt;

use interleave::controller::{balance, trace_kernel, AccessTrace, ArrayGeometry};
use interleave::{AddressMapModel, Schedule};
use num_rational::Ratio;

use crate::config::{BenchConfig, KernelKind, Mode, Placement};
use crate::run::analysis_layouts;
use crate::BenchError;

pub const RECIPES: [&str; 3] = [
    "jacobi-512-128",
    "triad-offsets-128-256-384",
    "stream-offset-0-worstcase",
];

/// Offending entries listed per failed recipe.
const MAX_LISTED: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeReport {
    pub name: String,
    pub passed: bool,
    pub summary: String,
    /// Addresses that break the expected behaviour, one line each.
    pub offending: Vec<String>,
}

impl fmt::Display for RecipeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.summary)?;
        for line in &self.offending {
            write!(f, "\n  {line}")?;
        }
        Ok(())
    }
}

pub fn recipe_config(name: &str, model: &AddressMapModel) -> Result<BenchConfig, BenchError> {
    let base = BenchConfig {
        mode: Mode::Analyze,
        model: model.clone(),
        ..BenchConfig::default()
    };
    Ok(match name {
        "jacobi-512-128" => BenchConfig {
            kernel: KernelKind::Jacobi2D,
            n: 1000,
            threads: 4,
            schedule: Schedule::Chunked(1),
            segment_alignment: 512,
            shift: 128,
            ..base
        },
        "triad-offsets-128-256-384" => BenchConfig {
            kernel: KernelKind::VectorTriad,
            n: 1 << 20,
            threads: 4,
            segment_alignment: 8192,
            offsets: vec![0, 128, 256, 384],
            ..base
        },
        "stream-offset-0-worstcase" => BenchConfig {
            kernel: KernelKind::Triad,
            n: 1 << 25,
            threads: 8,
            placement: Placement::Common,
            offsets: vec![0],
            ..base
        },
        other => {
            return Err(BenchError::Config(format!(
                "unknown recipe {other:?}, expected one of {}",
                RECIPES.join(", ")
            )))
        }
    })
}

pub fn recipe_check(name: &str, model: &AddressMapModel) -> Result<RecipeReport, BenchError> {
    let cfg = recipe_config(name, model)?;
    cfg.validate()?;
    match name {
        "jacobi-512-128" => check_rows(name, &cfg),
        "triad-offsets-128-256-384" => {
            let all = model.controller_count();
            check_every_step(name, &cfg, |d| d == all, Ratio::from_integer(1))
        }
        _ => check_every_step(name, &cfg, |d| d == 1, Ratio::new(1, model.controller_count() as u64)),
    }
}

/// Row `k` of both planes must start on controller `k mod count`.
fn check_rows(name: &str, cfg: &BenchConfig) -> Result<RecipeReport, BenchError> {
    let layouts = analysis_layouts(cfg)?;
    let model = &cfg.model;
    let count = model.controller_count();
    let mut offending = Vec::new();
    let mut first_rows = Vec::new();
    for (geom, plane) in layouts.arrays.iter().zip(["dest", "source"]) {
        let ArrayGeometry::Rows { plan, base } = geom else {
            return Err(BenchError::Config("row layout expected".into()));
        };
        for (k, &off) in plan.segment_byte_offsets().iter().enumerate() {
            let addr = base + off as u64;
            let c = model.controller_of(addr);
            if plane == "source" && k < 8 {
                first_rows.push(c.to_string());
            }
            if c != k % count {
                offending.push(format!(
                    "{plane} row {k}: address {addr:#x} on controller {c}, expected {}",
                    k % count
                ));
            }
        }
    }
    let score = analyze_trace(cfg)?;
    let total = offending.len();
    offending.truncate(MAX_LISTED);
    Ok(RecipeReport {
        name: name.to_string(),
        passed: total == 0,
        summary: format!(
            "row start controllers {} ...; {total} misplaced rows; balance {}",
            first_rows.join(","),
            score
        ),
        offending,
    })
}

fn analyze_trace(cfg: &BenchConfig) -> Result<Ratio<u64>, BenchError> {
    Ok(balance(&trace(cfg)?)?.score())
}

fn trace(cfg: &BenchConfig) -> Result<AccessTrace, BenchError> {
    let layouts = analysis_layouts(cfg)?;
    Ok(trace_kernel(
        &cfg.model,
        &cfg.descriptor(),
        &layouts,
        cfg.threads,
        cfg.schedule,
        cfg.step_limit,
    )?)
}

/// Every traced step must address a number of distinct controllers that
/// satisfies `ok`, and the overall score must equal `want`.
fn check_every_step(
    name: &str,
    cfg: &BenchConfig,
    ok: impl Fn(usize) -> bool,
    want: Ratio<u64>,
) -> Result<RecipeReport, BenchError> {
    let trace = trace(cfg)?;
    let model = &cfg.model;
    let score = balance(&trace)?.score();
    let mut offending = Vec::new();
    let mut bad_steps = 0;
    for (s, step) in trace.steps.iter().enumerate() {
        let mut ctl: Vec<usize> = step.iter().map(|r| model.controller_of(r.line)).collect();
        ctl.sort_unstable();
        ctl.dedup();
        if ok(ctl.len()) {
            continue;
        }
        bad_steps += 1;
        if offending.len() < MAX_LISTED {
            let lines: Vec<String> = step
                .iter()
                .map(|r| format!("t{}s{}:{:#x}->c{}", r.thread, r.stream, r.line, model.controller_of(r.line)))
                .collect();
            offending.push(format!("step {s}: {}", lines.join(" ")));
        }
    }
    Ok(RecipeReport {
        name: name.to_string(),
        passed: bad_steps == 0 && score == want,
        summary: format!(
            "balance {score} (expected {want}) over {} steps, {bad_steps} off-target steps",
            trace.steps.len()
        ),
        offending,
    })
}
