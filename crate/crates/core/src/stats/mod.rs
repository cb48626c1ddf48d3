//! Mergeable estimators shared by both samplers.
//!
//! Every accumulator here is a plain value type: workers fill their own
//! copies and the results are combined with `merge`. Merging is the only
//! cross-thread interaction.

mod accumulator;
mod goodness;
mod ratio;

pub use accumulator::{Accumulator, LogMeanAccumulator};
pub use goodness::{chi_square_fit, ChiSquare, Histogram};
pub use ratio::{RatioAccumulator, WeightedRatios};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("non-finite sample {0}")]
    NonFinite(f64),
    #[error("ratio denominator mean {mean} is indistinguishable from zero")]
    DegenerateRatio { mean: f64 },
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("invalid histogram range [{lo}, {hi}) with {bins} bins")]
    InvalidHistogram { lo: f64, hi: f64, bins: usize },
    #[error("not enough expected mass for a chi-square test ({retained} bins retained)")]
    TooFewBins { retained: usize },
}

/// A point estimate with its standard error and the number of independent
/// units it was built from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub count: u64,
}

impl Estimate {
    /// True when `target` lies within `k` standard errors of the estimate.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}
