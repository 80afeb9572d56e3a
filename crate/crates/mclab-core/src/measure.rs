//! Probability measures on `{1, ..., m}` with synchronized linear and
//! log-space representations.
//!
//! Stationary masses of the chains studied here can underflow `f64`
//! (masses as small as `n^{-n/2}` appear), so every measure carries
//! `log_weights` alongside `weights`. Set operations that must survive
//! underflow (`log_mass`) run entirely in log-space via the log-sum-exp
//! trick.

use crate::error::{Error, Result};

/// `log(sum(exp(x_i)))` computed stably. Empty input gives `-inf`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Incremental log-sum-exp accumulator for streaming sums of `exp(x_i)`.
///
/// Keeps the running maximum and a compensated sum of shifted
/// exponentials, so adding terms one at a time costs O(1) and never
/// underflows as long as the individual exponents are finite.
#[derive(Debug, Clone)]
pub struct StreamingLogSum {
    max: f64,
    sum: f64,
}

impl StreamingLogSum {
    pub fn new() -> Self {
        StreamingLogSum {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    /// Adds a term `exp(x)` to the running sum.
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            // Rescale the accumulated sum to the new maximum.
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    /// `log` of the accumulated sum; `-inf` when empty.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for StreamingLogSum {
    fn default() -> Self {
        Self::new()
    }
}

/// A probability measure on `{1, ..., m}`.
///
/// Invariants: `weights` sum to 1 (up to rounding), `log_weights[i]`
/// equals `ln(weights[i])` whenever `weights[i]` is representable, and
/// stays meaningful (finite, normalized in log-space) even when the
/// linear weight underflows to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl Measure {
    /// Builds a measure from nonnegative weights, normalizing their sum to 1.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("measure needs at least one state".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) {
                return Err(Error::NegativeInput(i));
            }
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Domain(format!(
                "weights must have a positive finite sum, got {total}"
            )));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Measure {
            weights,
            log_weights,
        })
    }

    /// Builds a measure from unnormalized log-weights; normalization happens
    /// in log-space so inputs may span thousands of orders of magnitude.
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::Domain("measure needs at least one state".into()));
        }
        if log_weights.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::Domain("log-weights must be finite or -inf".into()));
        }
        let norm = log_sum_exp(log_weights.iter().cloned());
        if norm == f64::NEG_INFINITY {
            return Err(Error::Domain("all log-weights are -inf".into()));
        }
        let log_weights: Vec<f64> = log_weights.iter().map(|x| x - norm).collect();
        let weights = log_weights.iter().map(|x| x.exp()).collect();
        Ok(Measure {
            weights,
            log_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Mass of state `x` (1-based).
    pub fn get(&self, x: usize) -> f64 {
        self.weights[x - 1]
    }

    /// `ln` of the mass of state `x` (1-based); finite even when `get`
    /// underflows.
    pub fn log_get(&self, x: usize) -> f64 {
        self.log_weights[x - 1]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Mass of a set of states (1-based indices).
    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.weights[x - 1]).sum()
    }

    /// `ln` of the mass of a set, computed in log-space.
    pub fn log_mass(&self, set: &[usize]) -> f64 {
        log_sum_exp(set.iter().map(|&x| self.log_weights[x - 1]))
    }

    /// Expectation of `f` under the measure.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Variance of `f` under the measure.
    pub fn variance(&self, f: &[f64]) -> f64 {
        let mean = self.expectation(f);
        self.weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * (v - mean) * (v - mean))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn from_weights_normalizes() {
        let mu = Measure::from_weights(vec![2.0, 6.0]).unwrap();
        assert_relative_eq!(mu.get(1), 0.25, max_relative = 1e-15);
        assert_relative_eq!(mu.get(2), 0.75, max_relative = 1e-15);
        assert_relative_eq!(mu.log_get(2), 0.75f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn from_log_weights_survives_underflow() {
        // Two states 2000 nats apart: the small one underflows linearly
        // but keeps an exact log mass.
        let mu = Measure::from_log_weights(vec![0.0, -2000.0]).unwrap();
        assert_eq!(mu.get(2), 0.0, "linear weight should underflow to 0");
        assert_relative_eq!(mu.log_get(2), -2000.0, max_relative = 1e-12);
        assert_relative_eq!(mu.get(1), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn log_mass_matches_linear_mass_when_representable() {
        let mu = Measure::from_weights(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let set = vec![2, 4];
        assert_relative_eq!(mu.log_mass(&set), mu.mass(&set).ln(), max_relative = 1e-14);
    }

    #[test]
    fn streaming_log_sum_matches_batch() {
        let xs = vec![-700.0, -701.5, -690.0, -1000.0];
        let mut s = StreamingLogSum::new();
        for &x in &xs {
            s.add(x);
        }
        assert_relative_eq!(
            s.value(),
            log_sum_exp(xs.iter().cloned()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn negative_weight_is_rejected() {
        assert!(Measure::from_weights(vec![0.5, -0.1]).is_err());
    }

    #[test]
    fn expectation_and_variance() {
        let mu = Measure::from_weights(vec![1.0, 1.0]).unwrap();
        let f = vec![0.0, 2.0];
        assert_relative_eq!(mu.expectation(&f), 1.0, max_relative = 1e-15);
        assert_relative_eq!(mu.variance(&f), 1.0, max_relative = 1e-15);
    }
}
