use super::{Estimate, StatsError};

/// Running mean and sum of squared deviations (Welford recurrence), with
/// the pairwise combination rule of Chan et al. for merging.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) -> Result<(), StatsError> {
        if !value.is_finite() {
            return Err(StatsError::NonFinite(value));
        }
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
        Ok(())
    }

    pub fn merge(&self, other: &Accumulator) -> Accumulator {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        Accumulator {
            count,
            mean: (na * self.mean + nb * other.mean) / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    /// Multiplies every value seen so far by `factor`.
    pub(crate) fn scale(&mut self, factor: f64) {
        self.mean *= factor;
        self.m2 *= factor * factor;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the mean.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased sample variance; zero with fewer than two values.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean, σ/√N.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean,
            stderr: self.stderr(),
            count: self.count,
        }
    }
}

impl Extend<f64> for Accumulator {
    /// Non-finite values are skipped; use [`Accumulator::push`] to see them.
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            let _ = self.push(v);
        }
    }
}

/// Mean of values supplied by their logarithm, for weights that overflow
/// in the linear domain.
///
/// Internally the values are held as `exp(log_value - shift)`; the shift
/// follows the running maximum and the moments are rescaled when it moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanAccumulator {
    shift: f64,
    scaled: Accumulator,
}

impl Default for LogMeanAccumulator {
    fn default() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            scaled: Accumulator::new(),
        }
    }
}

impl LogMeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_log(&mut self, log_value: f64) -> Result<(), StatsError> {
        if log_value.is_nan() || log_value == f64::INFINITY {
            return Err(StatsError::NonFinite(log_value));
        }
        if log_value > self.shift {
            self.rescale_to(log_value);
        }
        self.scaled.push((log_value - self.shift).exp())
    }

    fn rescale_to(&mut self, shift: f64) {
        if self.scaled.count() > 0 {
            self.scaled.scale((self.shift - shift).exp());
        }
        self.shift = shift;
    }

    pub fn merge(&self, other: &LogMeanAccumulator) -> LogMeanAccumulator {
        if other.scaled.count() == 0 {
            return *self;
        }
        if self.scaled.count() == 0 {
            return *other;
        }
        let shift = self.shift.max(other.shift);
        let mut a = *self;
        let mut b = *other;
        a.rescale_to(shift);
        b.rescale_to(shift);
        LogMeanAccumulator {
            shift,
            scaled: a.scaled.merge(&b.scaled),
        }
    }

    pub fn count(&self) -> u64 {
        self.scaled.count()
    }

    /// Logarithm of the sample mean.
    pub fn log_mean(&self) -> f64 {
        self.shift + self.scaled.mean().ln()
    }

    /// Standard error of `log_mean`, by the delta method: stderr(mean)/mean.
    pub fn log_mean_stderr(&self) -> f64 {
        self.scaled.stderr() / self.scaled.mean()
    }

    /// Sample variance of the underlying values divided by the squared mean.
    pub fn relative_variance(&self) -> f64 {
        self.scaled.variance() / (self.scaled.mean() * self.scaled.mean())
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.log_mean(),
            stderr: self.log_mean_stderr(),
            count: self.count(),
        }
    }
}
