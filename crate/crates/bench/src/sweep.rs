use std::fmt;
use std::str::FromStr;

use interleave::controller::detect_period;

use crate::config::BenchConfig;
use crate::run::{run, BenchRecord};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Byte offset, applied as a single value (array `k` at `k * offset`).
    Offset,
    /// Array length or domain edge.
    Length,
    Threads,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Offset => "offset",
            SweepVar::Length => "length",
            SweepVar::Threads => "threads",
        }
    }

    pub fn apply(&self, cfg: &mut BenchConfig, value: usize) {
        match self {
            SweepVar::Offset => cfg.offsets = vec![value],
            SweepVar::Length => cfg.n = value,
            SweepVar::Threads => cfg.threads = value,
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "offset" => Ok(SweepVar::Offset),
            "length" => Ok(SweepVar::Length),
            "threads" => Ok(SweepVar::Threads),
            other => Err(BenchError::Config(format!("unknown sweep variable {other:?}"))),
        }
    }
}

/// Records of one swept variable, in sweep order. `variable` is `None` for
/// a single unswept run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub variable: Option<SweepVar>,
    pub values: Vec<usize>,
    pub records: Vec<BenchRecord>,
}

impl SweepSeries {
    pub fn single(record: BenchRecord) -> Self {
        Self {
            variable: None,
            values: Vec::new(),
            records: vec![record],
        }
    }

    /// Smallest period of the balance scores, in units of the swept value.
    pub fn balance_period(&self) -> Result<Option<usize>, BenchError> {
        let scores: Vec<Option<u64>> = self
            .records
            .iter()
            .map(|r| r.balance_score.map(f64::to_bits))
            .collect();
        if scores.iter().any(Option::is_none) {
            return Err(BenchError::Config("series has no balance scores".into()));
        }
        Ok(detect_period(&self.values, &scores)?)
    }
}

/// Parses `start:end:step` (inclusive) or a comma-separated list.
pub fn parse_values(s: &str) -> Result<Vec<usize>, BenchError> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| BenchError::Config(format!("bad sweep value {t:?}")))
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (start, end, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(BenchError::Config(format!("bad range {s:?}"))),
        };
        if step == 0 || end < start {
            return Err(BenchError::Config(format!("empty range {s:?}")));
        }
        (start..=end).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(BenchError::Config("no sweep values".into()));
    }
    Ok(values)
}

fn strictly_monotone(values: &[usize]) -> bool {
    values.windows(2).all(|w| w[0] < w[1]) || values.windows(2).all(|w| w[0] > w[1])
}

/// Runs `base` once per value of `variable`.
pub fn sweep(base: &BenchConfig, variable: SweepVar, values: &[usize]) -> Result<SweepSeries, BenchError> {
    if values.is_empty() || !strictly_monotone(values) {
        return Err(BenchError::Config("sweep values must be nonempty and strictly monotone".into()));
    }
    let mut records = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = base.clone();
        variable.apply(&mut cfg, v);
        records.push(run(&cfg)?);
    }
    Ok(SweepSeries {
        variable: Some(variable),
        values: values.to_vec(),
        records,
    })
}
