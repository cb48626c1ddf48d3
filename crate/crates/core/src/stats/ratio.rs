use super::{Estimate, StatsError};

/// Joint moments of a (numerator, denominator) stream for the ratio
/// estimator `mean(n) / mean(d)`.
///
/// The error estimate uses the delta method with the sample covariance, so
/// numerators and denominators that share a weight factor are handled.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioAccumulator {
    count: u64,
    mean_n: f64,
    mean_d: f64,
    m2_n: f64,
    m2_d: f64,
    c_nd: f64,
    mean_abs_d: f64,
}

impl RatioAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, numerator: f64, denominator: f64) -> Result<(), StatsError> {
        if !numerator.is_finite() {
            return Err(StatsError::NonFinite(numerator));
        }
        if !denominator.is_finite() {
            return Err(StatsError::NonFinite(denominator));
        }
        self.count += 1;
        let n = self.count as f64;
        let dn = numerator - self.mean_n;
        let dd = denominator - self.mean_d;
        self.mean_n += dn / n;
        self.mean_d += dd / n;
        self.m2_n += dn * (numerator - self.mean_n);
        self.m2_d += dd * (denominator - self.mean_d);
        self.c_nd += dn * (denominator - self.mean_d);
        self.mean_abs_d += (denominator.abs() - self.mean_abs_d) / n;
        Ok(())
    }

    pub fn merge(&self, other: &RatioAccumulator) -> RatioAccumulator {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let dn = other.mean_n - self.mean_n;
        let dd = other.mean_d - self.mean_d;
        let w = na * nb / n;
        RatioAccumulator {
            count,
            mean_n: (na * self.mean_n + nb * other.mean_n) / n,
            mean_d: (na * self.mean_d + nb * other.mean_d) / n,
            m2_n: self.m2_n + other.m2_n + dn * dn * w,
            m2_d: self.m2_d + other.m2_d + dd * dd * w,
            c_nd: self.c_nd + other.c_nd + dn * dd * w,
            mean_abs_d: (na * self.mean_abs_d + nb * other.mean_abs_d) / n,
        }
    }

    /// Multiplies every numerator and denominator seen so far by `factor`.
    pub(crate) fn scale(&mut self, factor: f64) {
        let f2 = factor * factor;
        self.mean_n *= factor;
        self.mean_d *= factor;
        self.mean_abs_d *= factor.abs();
        self.m2_n *= f2;
        self.m2_d *= f2;
        self.c_nd *= f2;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean_numerator(&self) -> f64 {
        self.mean_n
    }

    pub fn mean_denominator(&self) -> f64 {
        self.mean_d
    }

    /// `r = mean(n)/mean(d)` with
    /// `stderr² = (var_n − 2r·cov + r²·var_d) / (N·mean(d)²)`.
    pub fn estimate(&self) -> Result<Estimate, StatsError> {
        let d = self.mean_d;
        if self.count == 0 || d == 0.0 || self.mean_d.abs() <= 64.0 * f64::EPSILON * self.mean_abs_d {
            return Err(StatsError::DegenerateRatio { mean: d });
        }
        let r = self.mean_n / d;
        if self.count < 2 {
            return Ok(Estimate { value: r, stderr: 0.0, count: self.count });
        }
        let dof = (self.count - 1) as f64;
        let var_n = self.m2_n / dof;
        let var_d = self.m2_d / dof;
        let cov = self.c_nd / dof;
        let var_r = (var_n - 2.0 * r * cov + r * r * var_d) / (self.count as f64 * d * d);
        Ok(Estimate {
            value: r,
            // Cancellation can leave a tiny negative value when n ∝ d.
            stderr: var_r.max(0.0).sqrt(),
            count: self.count,
        })
    }
}

/// Several ratio estimators sharing one log-domain weight, e.g.
/// `⟨f_k·Λ⟩ / ⟨Λ⟩` for a set of observables `f_k`.
///
/// Weights are supplied as logarithms and stored relative to the running
/// maximum so that exponentially large weights do not overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRatios {
    shift: f64,
    ratios: Vec<RatioAccumulator>,
}

impl WeightedRatios {
    pub fn new(observables: usize) -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            ratios: vec![RatioAccumulator::new(); observables],
        }
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn count(&self) -> u64 {
        self.ratios.first().map_or(0, |r| r.count())
    }

    fn rescale_to(&mut self, shift: f64) {
        if self.count() > 0 {
            let factor = (self.shift - shift).exp();
            for r in &mut self.ratios {
                r.scale(factor);
            }
        }
        self.shift = shift;
    }

    /// Adds one sample with weight `exp(log_weight)` and observable values
    /// `values[k]`.
    pub fn push(&mut self, log_weight: f64, values: &[f64]) -> Result<(), StatsError> {
        assert_eq!(values.len(), self.ratios.len(), "observable count mismatch");
        if !log_weight.is_finite() {
            return Err(StatsError::NonFinite(log_weight));
        }
        if log_weight > self.shift {
            self.rescale_to(log_weight);
        }
        let w = (log_weight - self.shift).exp();
        for (r, &v) in self.ratios.iter_mut().zip(values) {
            r.push(v * w, w)?;
        }
        Ok(())
    }

    pub fn merge(&self, other: &WeightedRatios) -> WeightedRatios {
        assert_eq!(self.len(), other.len(), "observable count mismatch");
        if other.count() == 0 {
            return self.clone();
        }
        if self.count() == 0 {
            return other.clone();
        }
        let shift = self.shift.max(other.shift);
        let mut a = self.clone();
        let mut b = other.clone();
        a.rescale_to(shift);
        b.rescale_to(shift);
        WeightedRatios {
            shift,
            ratios: a.ratios.iter().zip(&b.ratios).map(|(x, y)| x.merge(y)).collect(),
        }
    }

    pub fn estimates(&self) -> Result<Vec<Estimate>, StatsError> {
        self.ratios.iter().map(RatioAccumulator::estimate).collect()
    }
}
