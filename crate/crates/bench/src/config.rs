use std::fmt;
use std::str::FromStr;

use interleave::kernels::{KernelDescriptor, LbmLayout};
use interleave::{AddressMapModel, LayoutParams, Schedule};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Copy,
    Scale,
    Add,
    Triad,
    VectorTriad,
    Jacobi2D,
    Lbm,
}

impl KernelKind {
    pub const ALL: [KernelKind; 7] = [
        KernelKind::Copy,
        KernelKind::Scale,
        KernelKind::Add,
        KernelKind::Triad,
        KernelKind::VectorTriad,
        KernelKind::Jacobi2D,
        KernelKind::Lbm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Copy => "copy",
            KernelKind::Scale => "scale",
            KernelKind::Add => "add",
            KernelKind::Triad => "triad",
            KernelKind::VectorTriad => "vtriad",
            KernelKind::Jacobi2D => "jacobi2d",
            KernelKind::Lbm => "lbm",
        }
    }

    pub fn is_streaming(&self) -> bool {
        !matches!(self, KernelKind::Jacobi2D | KernelKind::Lbm)
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown kernel {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Timed execution on this machine.
    Measure,
    /// Controller balance of the modelled address map.
    Analyze,
    /// Expected rate from a memory bandwidth.
    Predict,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Measure => "measure",
            Mode::Analyze => "analyze",
            Mode::Predict => "predict",
        })
    }
}

impl FromStr for Mode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "measure" => Ok(Mode::Measure),
            "analyze" => Ok(Mode::Analyze),
            "predict" => Ok(Mode::Predict),
            other => Err(BenchError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// How the arrays of a streaming kernel are placed relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Every array in its own allocation aligned to the base alignment.
    Aligned,
    /// Arrays back to back in one block, each followed by `offset` bytes of
    /// padding. Analysis only.
    Common,
}

impl FromStr for Placement {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aligned" => Ok(Placement::Aligned),
            "common" => Ok(Placement::Common),
            other => Err(BenchError::Config(format!("unknown placement {other:?}"))),
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::Aligned => "aligned",
            Placement::Common => "common",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub kernel: KernelKind,
    /// Array length, grid edge or lattice edge.
    pub n: usize,
    pub threads: usize,
    pub schedule: Schedule,
    /// Segments per streaming array; the thread count when `None`.
    pub segments: Option<usize>,
    pub base_alignment: usize,
    pub segment_alignment: usize,
    pub shift: usize,
    /// Byte offsets per array. A single value `o` places array `k` at
    /// `k * o`, as padding between consecutive arrays would.
    pub offsets: Vec<usize>,
    pub placement: Placement,
    pub pad_dim1: usize,
    pub lbm_layout: LbmLayout,
    pub coalesce: bool,
    /// Element width of the lattice kernel, 8 or 4 bytes.
    pub lbm_element_size: usize,
    pub reps: usize,
    pub mode: Mode,
    pub model: AddressMapModel,
    /// Memory bandwidth in bytes/s including RFO, for predict mode.
    pub bandwidth: Option<f64>,
    /// Longest trace analysed per configuration; `None` traces everything.
    pub step_limit: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Triad,
            n: 1 << 20,
            threads: 1,
            schedule: Schedule::Static,
            segments: None,
            base_alignment: 8192,
            segment_alignment: 0,
            shift: 0,
            offsets: vec![0],
            placement: Placement::Aligned,
            pad_dim1: 0,
            lbm_layout: LbmLayout::Ijkv,
            coalesce: false,
            lbm_element_size: 8,
            reps: 5,
            mode: Mode::Measure,
            model: AddressMapModel::default(),
            bandwidth: None,
            step_limit: Some(4096),
        }
    }
}

impl BenchConfig {
    pub fn descriptor(&self) -> KernelDescriptor {
        let n = self.n;
        match self.kernel {
            KernelKind::Copy => KernelDescriptor::copy(n),
            KernelKind::Scale => KernelDescriptor::scale(n),
            KernelKind::Add => KernelDescriptor::add(n),
            KernelKind::Triad => KernelDescriptor::triad(n),
            KernelKind::VectorTriad => KernelDescriptor::vector_triad(n),
            KernelKind::Jacobi2D => KernelDescriptor::jacobi2d(n),
            KernelKind::Lbm => KernelDescriptor::lbm(n, self.coalesce, self.lbm_element_size),
        }
    }

    pub fn segment_count(&self) -> usize {
        self.segments.unwrap_or(self.threads).clamp(1, self.n.max(1))
    }

    /// Byte offset of array `k` out of `count`.
    pub fn array_offset(&self, k: usize, count: usize) -> Result<usize, BenchError> {
        match self.offsets.as_slice() {
            [] => Ok(0),
            [o] => Ok(k * o),
            list if list.len() == count => Ok(list[k]),
            list => Err(BenchError::Config(format!(
                "{} offsets given for the {} arrays of {}",
                list.len(),
                count,
                self.kernel
            ))),
        }
    }

    pub fn layout_params(&self, offset: usize) -> LayoutParams {
        LayoutParams::default()
            .with_base_alignment(self.base_alignment)
            .with_segment_alignment(self.segment_alignment)
            .with_shift(self.shift)
            .with_offset(offset)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        self.schedule.check(self.threads)?;
        if self.mode == Mode::Measure && self.reps < 3 {
            return bad(format!("measure mode needs at least 3 repetitions, got {}", self.reps));
        }
        if self.mode == Mode::Predict && self.bandwidth.is_none() {
            return bad("predict mode needs a bandwidth".into());
        }
        if !matches!(self.lbm_element_size, 4 | 8) {
            return bad(format!("element size {} not supported", self.lbm_element_size));
        }
        if self.lbm_element_size != 8 && self.kernel != KernelKind::Lbm {
            return bad("single precision is only available for the lattice kernel".into());
        }
        if self.placement == Placement::Common {
            if !self.kernel.is_streaming() {
                return bad("common placement applies to streaming kernels only".into());
            }
            if self.mode == Mode::Measure {
                return bad("common placement is available in analyze mode only".into());
            }
            if self.offsets.len() > 1 {
                return bad("common placement takes a single padding offset".into());
            }
        }
        let count = self.descriptor().arrays.len();
        for k in 0..count {
            self.layout_params(self.array_offset(k, count)?).validate()?;
        }
        Ok(())
    }
}

/// Turns a `key=value` file into command-line tokens: `--key value`, or
/// just `--key` for `true`. `false` drops the key. Blank lines and lines
/// starting with `#` are skipped.
pub fn config_file_args(text: &str) -> Result<Vec<String>, BenchError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BenchError::Config(format!("line {}: expected key=value", no + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(BenchError::Config(format!("line {}: empty key", no + 1)));
        }
        match value {
            "true" | "" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_names_round_trip() {
        for k in KernelKind::ALL {
            assert_eq!(k.name().parse::<KernelKind>().unwrap(), k);
        }
        assert!("stream".parse::<KernelKind>().is_err());
    }

    #[test]
    fn single_offset_spreads_over_arrays() {
        let c = BenchConfig {
            offsets: vec![256],
            ..BenchConfig::default()
        };
        assert_eq!(
            (0..3).map(|k| c.array_offset(k, 3).unwrap()).collect::<Vec<_>>(),
            [0, 256, 512]
        );
        let c = BenchConfig {
            offsets: vec![0, 128, 256, 384],
            ..c
        };
        assert_eq!(c.array_offset(3, 4).unwrap(), 384);
        assert!(c.array_offset(0, 3).is_err());
    }

    #[test]
    fn validation() {
        assert!(BenchConfig::default().validate().is_ok());
        let c = BenchConfig {
            reps: 2,
            ..BenchConfig::default()
        };
        assert!(c.validate().is_err());
        let c = BenchConfig {
            mode: Mode::Predict,
            ..BenchConfig::default()
        };
        assert!(c.validate().is_err());
        let c = BenchConfig {
            offsets: vec![4],
            ..BenchConfig::default()
        };
        assert!(c.validate().is_err());
        let c = BenchConfig {
            kernel: KernelKind::Jacobi2D,
            placement: Placement::Common,
            ..BenchConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_file_tokens() {
        let text = "# comment\nkernel = triad\n\nn=1024\ncoalesce=true\nverbose=false\nseg_align=512\n";
        assert_eq!(
            config_file_args(text).unwrap(),
            ["--kernel", "triad", "--n", "1024", "--coalesce", "--seg-align", "512"]
        );
        assert!(config_file_args("kernel triad").is_err());
    }
}
