//! Static loop schedules: contiguous blocks or round-robin chunks.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("thread count must be at least 1")]
    NoThreads,
    #[error("chunk size must be at least 1")]
    ZeroChunk,
    #[error("unrecognised schedule {0:?}, expected \"static\" or \"static,<chunk>\"")]
    Parse(String),
}

/// How iterations of a parallel loop are assigned to threads before it runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// One contiguous block per thread; the first `total % threads` blocks
    /// are one iteration longer.
    #[default]
    Static,
    /// Chunks of the given size dealt round-robin to the threads.
    Chunked(usize),
}

impl Schedule {
    pub fn check(&self, threads: usize) -> Result<(), ScheduleError> {
        if threads == 0 {
            return Err(ScheduleError::NoThreads);
        }
        if *self == Schedule::Chunked(0) {
            return Err(ScheduleError::ZeroChunk);
        }
        Ok(())
    }

    fn block(thread: usize, total: usize, threads: usize) -> Range<usize> {
        let base = total / threads;
        let extra = total % threads;
        let start = thread * base + thread.min(extra);
        let len = base + usize::from(thread < extra);
        start..start + len
    }

    /// Number of iterations given to `thread`.
    pub fn count(&self, thread: usize, total: usize, threads: usize) -> usize {
        match *self {
            Schedule::Static => Self::block(thread, total, threads).len(),
            Schedule::Chunked(c) => {
                let chunks = total.div_ceil(c);
                if thread >= chunks {
                    return 0;
                }
                let mine = (chunks - 1 - thread) / threads + 1;
                let last = chunks - 1;
                let tail_short = if last % threads == thread {
                    last * c + c - total
                } else {
                    0
                };
                mine * c - tail_short
            }
        }
    }

    /// The `k`-th iteration executed by `thread`.
    pub fn nth(&self, thread: usize, k: usize, total: usize, threads: usize) -> Option<usize> {
        match *self {
            Schedule::Static => {
                let r = Self::block(thread, total, threads);
                (k < r.len()).then(|| r.start + k)
            }
            Schedule::Chunked(c) => {
                let chunk = thread + threads * (k / c);
                let i = chunk * c + k % c;
                (i < total).then_some(i)
            }
        }
    }

    /// Contiguous iteration ranges of `thread`, in execution order.
    pub fn ranges(
        &self,
        thread: usize,
        total: usize,
        threads: usize,
    ) -> impl Iterator<Item = Range<usize>> {
        let (first, step, width) = match *self {
            Schedule::Static => {
                let r = Self::block(thread, total, threads);
                (r.start, usize::MAX, r.len())
            }
            Schedule::Chunked(c) => (thread * c, threads * c, c),
        };
        let mut next = Some(first);
        std::iter::from_fn(move || {
            let start = next?;
            if start >= total || width == 0 {
                return None;
            }
            next = start.checked_add(step);
            Some(start..(start + width).min(total))
        })
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Static => f.write_str("static"),
            Schedule::Chunked(c) => write!(f, "static,{c}"),
        }
    }
}

impl FromStr for Schedule {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once(',') {
            None if s == "static" => Ok(Schedule::Static),
            Some(("static", chunk)) => {
                let c: usize = chunk
                    .trim()
                    .parse()
                    .map_err(|_| ScheduleError::Parse(s.to_string()))?;
                if c == 0 {
                    return Err(ScheduleError::ZeroChunk);
                }
                Ok(Schedule::Chunked(c))
            }
            _ => Err(ScheduleError::Parse(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("static".parse::<Schedule>().unwrap(), Schedule::Static);
        assert_eq!("static,1".parse::<Schedule>().unwrap(), Schedule::Chunked(1));
        assert_eq!(Schedule::Chunked(16).to_string(), "static,16");
        assert!("dynamic".parse::<Schedule>().is_err());
        assert_eq!("static,0".parse::<Schedule>(), Err(ScheduleError::ZeroChunk));
    }

    #[test]
    fn static_blocks_follow_partition_rule() {
        let s = Schedule::Static;
        let r: Vec<_> = (0..3).map(|p| s.ranges(p, 10, 3).collect::<Vec<_>>()).collect();
        assert_eq!(r, vec![vec![0..4], vec![4..7], vec![7..10]]);
        assert_eq!(s.count(5, 3, 8), 0);
    }

    #[test]
    fn round_robin_chunks() {
        let s = Schedule::Chunked(2);
        let r: Vec<_> = s.ranges(1, 11, 2).collect();
        assert_eq!(r, vec![2..4, 6..8, 10..11]);
        assert_eq!(s.count(1, 11, 2), 5);
        assert_eq!(s.nth(1, 4, 11, 2), Some(10));
        assert_eq!(s.nth(1, 5, 11, 2), None);
    }

    proptest! {
        #[test]
        fn schedules_partition_the_iteration_space(
            total in 0usize..500,
            threads in 1usize..12,
            chunk in 0usize..9,
        ) {
            let s = if chunk == 0 { Schedule::Static } else { Schedule::Chunked(chunk) };
            let mut seen = vec![0u8; total];
            for p in 0..threads {
                let flat: Vec<usize> = s.ranges(p, total, threads).flatten().collect();
                prop_assert_eq!(flat.len(), s.count(p, total, threads));
                for (k, &i) in flat.iter().enumerate() {
                    prop_assert_eq!(s.nth(p, k, total, threads), Some(i));
                    seen[i] += 1;
                }
                prop_assert!(flat.windows(2).all(|w| w[0] < w[1]));
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
