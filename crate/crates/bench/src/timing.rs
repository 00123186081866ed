/// Wall times of the timed repetitions, warm-up excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub samples: Vec<f64>,
}

impl Timing {
    pub fn best(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Median, averaging the two middle samples for even counts.
    pub fn median(&self) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        let m = s.len() / 2;
        if s.len() % 2 == 1 {
            s[m]
        } else {
            (s[m - 1] + s[m]) / 2.0
        }
    }
}

/// Runs `sweep` once untimed and then `reps` times, collecting the seconds
/// each call reports.
pub fn time_reps<E>(reps: usize, mut sweep: impl FnMut() -> Result<f64, E>) -> Result<Timing, E> {
    sweep()?;
    let samples = (0..reps.max(1)).map(|_| sweep()).collect::<Result<Vec<_>, E>>()?;
    Ok(Timing { samples })
}
