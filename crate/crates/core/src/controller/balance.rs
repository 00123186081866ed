use num_rational::Ratio;

use super::trace::{trace_kernel, AccessTrace, LayoutSet};
use super::{AddressMapModel, MapError};
use crate::kernels::KernelDescriptor;
use crate::schedule::Schedule;

/// How evenly a trace spreads over the memory controllers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceScore {
    distinct_total: u64,
    steps: u64,
    histogram: Vec<u64>,
}

impl BalanceScore {
    pub fn controller_count(&self) -> usize {
        self.histogram.len()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Accesses per controller over the whole trace.
    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    /// Mean number of distinct controllers addressed in one step.
    pub fn mean_distinct(&self) -> Ratio<u64> {
        Ratio::new(self.distinct_total, self.steps)
    }

    /// Mean distinct controllers per step over the controller count, in
    /// `(0, 1]`.
    pub fn score(&self) -> Ratio<u64> {
        Ratio::new(self.distinct_total, self.steps * self.controller_count() as u64)
    }

    pub fn score_f64(&self) -> f64 {
        let r = self.score();
        *r.numer() as f64 / *r.denom() as f64
    }

    /// Busiest over least busy controller; `None` if some controller is idle.
    pub fn evenness(&self) -> Option<f64> {
        let max = *self.histogram.iter().max()?;
        let min = *self.histogram.iter().min()?;
        (min > 0).then(|| max as f64 / min as f64)
    }
}

pub fn balance(trace: &AccessTrace) -> Result<BalanceScore, MapError> {
    if trace.steps.is_empty() || trace.steps.iter().any(Vec::is_empty) {
        return Err(MapError::EmptyTrace);
    }
    let model = &trace.model;
    let controllers = model.controller_count();
    let mut histogram = vec![0u64; controllers];
    // step stamp per controller, to count distinct ones without clearing
    let mut seen = vec![usize::MAX; controllers];
    let mut distinct_total = 0u64;
    for (s, records) in trace.steps.iter().enumerate() {
        for r in records {
            let c = model.controller_of(r.line);
            histogram[c] += 1;
            if seen[c] != s {
                seen[c] = s;
                distinct_total += 1;
            }
        }
    }
    Ok(BalanceScore {
        distinct_total,
        steps: trace.steps.len() as u64,
        histogram,
    })
}

/// Balance scores over a range of array offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetSeries {
    /// Offsets in bytes, in sweep order.
    pub offsets: Vec<usize>,
    pub scores: Vec<BalanceScore>,
}

impl OffsetSeries {
    /// Smallest period of the score sequence, in bytes.
    pub fn period(&self) -> Result<Option<usize>, MapError> {
        let scores: Vec<Ratio<u64>> = self.scores.iter().map(BalanceScore::score).collect();
        detect_period(&self.offsets, &scores)
    }
}

/// Traces `desc` once per offset, using `layouts_for(offset)` to place the
/// arrays, and scores each trace.
#[allow(clippy::too_many_arguments)]
pub fn sweep_offset<F>(
    model: &AddressMapModel,
    desc: &KernelDescriptor,
    offsets: &[usize],
    threads: usize,
    schedule: Schedule,
    step_limit: Option<usize>,
    mut layouts_for: F,
) -> Result<OffsetSeries, MapError>
where
    F: FnMut(usize) -> Result<LayoutSet, MapError>,
{
    let mut scores = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        if offset % desc.element_size != 0 {
            return Err(MapError::InvalidOffset {
                offset,
                element_size: desc.element_size,
            });
        }
        let layouts = layouts_for(offset)?;
        let trace = trace_kernel(model, desc, &layouts, threads, schedule, step_limit)?;
        scores.push(balance(&trace)?);
    }
    Ok(OffsetSeries {
        offsets: offsets.to_vec(),
        scores,
    })
}

/// Smallest shift `p` (in units of `values`) with `samples[i + p] ==
/// samples[i]` for every sampled `i`, requiring at least two full periods in
/// the window. `values` must be uniformly spaced.
pub fn detect_period<T: PartialEq>(values: &[usize], samples: &[T]) -> Result<Option<usize>, MapError> {
    if values.len() != samples.len() {
        return Err(MapError::Descriptor(format!(
            "{} sample positions for {} samples",
            values.len(),
            samples.len()
        )));
    }
    if samples.len() < 2 {
        return Err(MapError::InsufficientData(samples.len()));
    }
    let spacing = values[1].checked_sub(values[0]).filter(|&d| d > 0);
    let spacing = match spacing {
        Some(d) if values.windows(2).all(|w| w[1].checked_sub(w[0]) == Some(d)) => d,
        _ => return Err(MapError::NonUniformSpacing),
    };
    let n = samples.len();
    Ok((1..=n / 2)
        .find(|&p| (0..n - p).all(|i| samples[i + p] == samples[i]))
        .map(|p| p * spacing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::trace::AccessRecord;
    use crate::kernels::Access;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trace_of(lines: Vec<Vec<u64>>) -> AccessTrace {
        AccessTrace {
            model: AddressMapModel::default(),
            threads: 1,
            streams: lines[0].len(),
            steps: lines
                .into_iter()
                .map(|step| {
                    step.into_iter()
                        .enumerate()
                        .map(|(i, line)| AccessRecord {
                            thread: 0,
                            stream: i as u32,
                            line,
                            access: Access::Read,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    #[test]
    fn single_controller_scores_a_quarter() {
        let t = trace_of(vec![vec![0, 512, 1024]; 10]);
        let b = balance(&t).unwrap();
        assert_eq!(b.score(), Ratio::new(1, 4));
        assert_eq!(b.histogram(), &[30, 0, 0, 0]);
        assert_eq!(b.evenness(), None);
    }

    #[test]
    fn four_controllers_score_one() {
        let t = trace_of(vec![vec![0, 128, 256, 384]; 3]);
        let b = balance(&t).unwrap();
        assert_eq!(b.score(), Ratio::from_integer(1));
        assert_eq!(b.evenness(), Some(1.0));
    }

    #[test]
    fn empty_trace() {
        let t = AccessTrace {
            model: AddressMapModel::default(),
            threads: 1,
            streams: 1,
            steps: vec![],
        };
        assert_eq!(balance(&t), Err(MapError::EmptyTrace));
    }

    #[test]
    fn random_addresses_match_occupancy_expectation() {
        // independent oracle: expected distinct bins when throwing k balls
        // into 4 bins is 4 * (1 - (3/4)^k)
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=6usize {
            let steps: Vec<Vec<u64>> = (0..40_000)
                .map(|_| (0..k).map(|_| rng.gen::<u64>() >> 16).collect())
                .collect();
            let got = balance(&trace_of(steps)).unwrap().score_f64();
            let expect = 1.0 - 0.75f64.powi(k as i32);
            assert!((got - expect).abs() < 0.01, "k={k}: {got} vs {expect}");
        }
    }

    #[test]
    fn relabeling_does_not_change_balance() {
        let mut t = trace_of(vec![vec![0, 128, 640], vec![64, 1024, 4096]]);
        let before = balance(&t).unwrap();
        for step in &mut t.steps {
            step.reverse();
            for r in step.iter_mut() {
                r.stream = 7 - r.stream;
                r.thread = 3;
            }
        }
        assert_eq!(balance(&t).unwrap(), before);
    }

    #[test]
    fn periods() {
        let vals: Vec<usize> = (0..8).map(|i| i * 64).collect();
        assert_eq!(detect_period(&vals, &[1, 2, 1, 2, 1, 2, 1, 2]).unwrap(), Some(128));
        assert_eq!(detect_period(&vals, &[5; 8]).unwrap(), Some(64));
        assert_eq!(detect_period(&vals, &[1, 2, 3, 4, 5, 6, 7, 8]).unwrap(), None);
        assert_eq!(
            detect_period(&[0], &[1]),
            Err(MapError::InsufficientData(1))
        );
        assert_eq!(
            detect_period(&[0, 8, 24], &[1, 1, 1]),
            Err(MapError::NonUniformSpacing)
        );
    }
}
