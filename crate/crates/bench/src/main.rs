use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use interleave::kernels::LbmLayout;
use interleave::{AddressMapModel, Schedule};
use interleave_bench::{
    config_file_args, emit_csv, parse_values, recipe_check, run, sweep, thrashing_candidate, BenchConfig,
    BenchRecord, KernelKind, Mode, Placement, SweepSeries, SweepVar, RECIPES,
};

#[derive(Parser)]
#[command(name = "bench", version, about = "Layout, bandwidth and memory-controller benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configuration (timed by default).
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "measure")]
        mode: Mode,
    },
    /// Run one configuration per value of a swept variable.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "measure")]
        mode: Mode,
        /// offset, length or threads
        #[arg(long)]
        var: SweepVar,
        /// start:end[:step] (inclusive) or a comma-separated list
        #[arg(long)]
        values: String,
    },
    /// Controller balance of the modelled address map.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Expected rate for a memory bandwidth.
    Predict {
        #[command(flatten)]
        common: Common,
    },
    /// Verify a named layout recipe, or all of them.
    Check {
        /// Recipe name or "all"
        #[arg(default_value = "all")]
        recipe: String,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Address bits selecting the memory controller, most significant first
    #[arg(long, value_delimiter = ',', default_values_t = [8u32, 7])]
    ctl_bits: Vec<u32>,
    #[arg(long, default_value_t = 6)]
    bank_bit: u32,
    /// Cache line size in bytes
    #[arg(long, default_value_t = 64)]
    line: u64,
}

impl ModelArgs {
    fn model(&self) -> Result<AddressMapModel> {
        Ok(AddressMapModel::new(self.ctl_bits.clone(), self.bank_bit, self.line)?)
    }
}

#[derive(Args)]
struct Common {
    /// key=value file with defaults for any of these flags
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "triad")]
    kernel: KernelKind,
    /// Array length, or grid/lattice edge
    #[arg(long, default_value_t = 1 << 20)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// static or static,CHUNK
    #[arg(long, default_value = "static")]
    schedule: Schedule,
    /// Segments per streaming array (default: thread count)
    #[arg(long)]
    segments: Option<usize>,
    /// Byte offset per array; a single value puts array k at k*offset
    #[arg(long, value_delimiter = ',', default_values_t = [0usize])]
    offset: Vec<usize>,
    /// aligned (separate allocations) or common (one padded block, analysis only)
    #[arg(long, default_value = "aligned")]
    placement: Placement,
    #[arg(long, default_value_t = 8192)]
    base_align: usize,
    /// Alignment of every segment after the first, 0 disables
    #[arg(long, default_value_t = 0)]
    seg_align: usize,
    #[arg(long, default_value_t = 0)]
    shift: usize,
    #[arg(long, default_value_t = 0)]
    pad_dim1: usize,
    /// ijkv or ivjk
    #[arg(long, default_value = "ijkv")]
    layout: LbmLayout,
    /// Fuse the two outer lattice loops into one parallel loop
    #[arg(long)]
    coalesce: bool,
    /// Lattice element precision: f64 or f32
    #[arg(long, default_value = "f64")]
    precision: String,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Memory bandwidth in bytes/s including RFO (predict mode)
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Steps traced per analysed configuration, 0 for all
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    /// Write the records to this CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

impl Common {
    fn config(&self, mode: Mode) -> Result<BenchConfig> {
        let lbm_element_size = match self.precision.as_str() {
            "f64" | "double" => 8,
            "f32" | "single" => 4,
            other => bail!("unknown precision {other:?}"),
        };
        Ok(BenchConfig {
            kernel: self.kernel,
            n: self.n,
            threads: self.threads,
            schedule: self.schedule,
            segments: self.segments,
            base_alignment: self.base_align,
            segment_alignment: self.seg_align,
            shift: self.shift,
            offsets: self.offset.clone(),
            placement: self.placement,
            pad_dim1: self.pad_dim1,
            lbm_layout: self.layout,
            coalesce: self.coalesce,
            lbm_element_size,
            reps: self.reps,
            mode,
            model: self.model.model()?,
            bandwidth: self.bandwidth,
            step_limit: (self.steps > 0).then_some(self.steps),
        })
    }
}

/// Splices the tokens of a `--config` file in front of the command-line
/// flags. Keys also given on the command line are dropped, so explicit
/// flags win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let pos = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args.get(pos + 1).cloned().context("--config needs a path")?,
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {path}"))?;
    let given: Vec<&str> = args
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let mut extra = Vec::new();
    let tokens = config_file_args(&text)?;
    let mut i = 0;
    while i < tokens.len() {
        let key = tokens[i].trim_start_matches("--");
        let has_value = tokens.get(i + 1).is_some_and(|t| !t.starts_with("--"));
        let take = if has_value { 2 } else { 1 };
        if !given.contains(&key) {
            extra.extend_from_slice(&tokens[i..i + take]);
        }
        i += take;
    }
    let mut out = args[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos..]);
    Ok(out)
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_else(|| "-".into())
}

fn print_header(variable: Option<SweepVar>) {
    let var = variable.map(|v| v.name()).unwrap_or("");
    println!(
        "{var:>8} {:>8} {:>10} {:>7} {:>10} {:>12} {:>12} {:>10} {:>10} {:>10} {:>8}",
        "kernel", "N", "threads", "schedule", "best_s", "median_s", "GB/s", "GB/s+RFO", "MLUP/s", "balance"
    );
}

fn print_record(value: Option<usize>, r: &BenchRecord) {
    let value = value.map(|v| v.to_string()).unwrap_or_default();
    println!(
        "{value:>8} {:>8} {:>10} {:>7} {:>10} {:>12} {:>12} {:>10} {:>10} {:>10} {:>8}",
        r.kernel.name(),
        r.n,
        r.threads,
        r.schedule.to_string(),
        fmt_opt(r.time_best_s, 6),
        fmt_opt(r.time_median_s, 6),
        fmt_opt(r.gbs_reported, 3),
        fmt_opt(r.gbs_actual, 3),
        fmt_opt(r.mlups, 2),
        fmt_opt(r.balance_score, 4),
    );
}

fn pinning_note(mode: Mode) {
    if mode == Mode::Measure {
        eprintln!("note: worker threads are not pinned; bind them with OS tools (taskset, numactl) for stable numbers");
    }
}

fn finish(series: &SweepSeries, csv: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = csv {
        emit_csv(series, path).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn single(common: &Common, mode: Mode) -> Result<()> {
    let cfg = common.config(mode)?;
    pinning_note(mode);
    let record = run(&cfg)?;
    print_header(None);
    print_record(None, &record);
    finish(&SweepSeries::single(record), &common.csv)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse_from(expand_config(std::env::args().collect())?);
    match cli.cmd {
        Cmd::Run { common, mode } => single(&common, mode)?,
        Cmd::Analyze { common } => single(&common, Mode::Analyze)?,
        Cmd::Predict { common } => single(&common, Mode::Predict)?,
        Cmd::Sweep {
            common,
            mode,
            var,
            values,
        } => {
            let cfg = common.config(mode)?;
            let values = parse_values(&values)?;
            pinning_note(mode);
            if cfg.kernel == KernelKind::Lbm && var == SweepVar::Length {
                for &n in values.iter().filter(|&&n| thrashing_candidate(n, cfg.pad_dim1)) {
                    eprintln!("warning: N={n} makes the first lattice dimension a multiple of 64 (cache thrashing candidate)");
                }
            }
            let series = sweep(&cfg, var, &values)?;
            print_header(Some(var));
            for (v, r) in series.values.iter().zip(&series.records) {
                print_record(Some(*v), r);
            }
            if mode == Mode::Analyze && series.values.len() >= 2 {
                match series.balance_period() {
                    Ok(Some(p)) => println!("balance period: {p} ({var})"),
                    Ok(None) => println!("balance period: none within the sweep"),
                    Err(e) => eprintln!("period detection skipped: {e}"),
                }
            }
            finish(&series, &common.csv)?;
        }
        Cmd::Check { recipe, model } => {
            let model = model.model()?;
            let names: Vec<&str> = if recipe == "all" {
                RECIPES.to_vec()
            } else {
                vec![recipe.as_str()]
            };
            let mut failed = false;
            for name in names {
                let report = recipe_check(name, &model)?;
                println!("{report}");
                failed |= !report.passed;
            }
            if failed {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
