use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::StatsError;

/// Fixed-width histogram on `[lo, hi)` with explicit tail counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self, StatsError> {
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(StatsError::InvalidHistogram { lo, hi, bins });
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn push(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            self.overflow += 1;
        } else {
            let bins = self.counts.len();
            let k = ((x - self.lo) / self.width()) as usize;
            self.counts[k.min(bins - 1)] += 1;
        }
    }

    /// Adds the counts of `other`, which must have identical binning.
    pub fn merge(&mut self, other: &Histogram) {
        assert!(
            self.lo == other.lo && self.hi == other.hi && self.counts.len() == other.counts.len(),
            "histogram binning mismatch"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + k as f64 * w, self.lo + (k + 1) as f64 * w)
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Counts mirrored through the centre of the range; only meaningful for a
    /// range symmetric about zero.
    pub fn mirrored(&self) -> Histogram {
        let mut counts = self.counts.clone();
        counts.reverse();
        Histogram {
            lo: self.lo,
            hi: self.hi,
            counts,
            underflow: self.overflow,
            overflow: self.underflow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    pub fn per_dof(&self) -> f64 {
        self.statistic / self.dof as f64
    }
}

/// Minimum expected count per cell; sparser neighbours are pooled.
pub const MIN_EXPECTED: f64 = 10.0;

/// Pearson χ² of `hist` against a fully specified density, given as its
/// probability mass on an interval (`mass(a, b)`, with infinite endpoints
/// for the tails). No parameters are fitted, so dof = cells − 1.
pub fn chi_square_fit<F>(hist: &Histogram, mass: F) -> Result<ChiSquare, StatsError>
where
    F: Fn(f64, f64) -> f64,
{
    let total = hist.total();
    if total == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let n = total as f64;

    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(hist.counts.len() + 2);
    cells.push((hist.underflow as f64, n * mass(f64::NEG_INFINITY, hist.lo)));
    for (k, &c) in hist.counts.iter().enumerate() {
        let (a, b) = hist.edges(k);
        cells.push((c as f64, n * mass(a, b)));
    }
    cells.push((hist.overflow as f64, n * mass(hist.hi, f64::INFINITY)));

    // Pool left to right until each cell has enough expected mass; a short
    // remainder is folded into the last retained cell.
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut pending = (0.0, 0.0);
    for (obs, exp) in cells {
        pending.0 += obs;
        pending.1 += exp;
        if pending.1 >= MIN_EXPECTED {
            pooled.push(pending);
            pending = (0.0, 0.0);
        }
    }
    if pending.0 > 0.0 || pending.1 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += pending.0;
                last.1 += pending.1;
            }
            None => pooled.push(pending),
        }
    }
    if pooled.len() < 2 {
        return Err(StatsError::TooFewBins { retained: pooled.len() });
    }

    let statistic: f64 = pooled
        .iter()
        .map(|&(obs, exp)| {
            if exp > 0.0 {
                (obs - exp) * (obs - exp) / exp
            } else if obs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    let p_value = if statistic.is_finite() { dist.sf(statistic) } else { 0.0 };
    Ok(ChiSquare { statistic, dof, p_value })
}
