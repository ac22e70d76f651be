//! Interval estimates for Monte Carlo tallies.
//!
//! Bound checks compare the upper confidence limit against an analytic
//! ceiling, so the interval construction is the part that has to be right:
//! Wilson for indicator events (well behaved near 0, where most of our
//! probabilities live), normal approximation for bounded statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::z_for_confidence;

/// Welford accumulator with the pairwise merge rule, so chunked parallel
/// reduction gives the same moments as a sequential pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance; 0 for fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n as f64 - 1.0)).max(0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub n: u64,
}

fn check_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidInput {
            context: "confidence level",
            reason: format!("must lie strictly between 0 and 1, got {confidence}"),
        });
    }
    Ok(())
}

/// Wilson score interval for an indicator event.
pub fn wilson_interval(successes: u64, n: u64, confidence: f64) -> Result<IntervalEstimate> {
    check_confidence(confidence)?;
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    if successes > n {
        return Err(Error::InvalidInput {
            context: "wilson_interval",
            reason: format!("{successes} successes out of {n} trials"),
        });
    }
    let z = z_for_confidence(confidence);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    // the score interval closes exactly at an empty or full tally; snap
    // past the rounding of center -/+ half
    let ci_low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let ci_high = if successes == n { 1.0 } else { (center + half).min(1.0) };
    Ok(IntervalEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / nf).sqrt(),
        ci_low,
        ci_high,
        confidence,
        n,
    })
}

/// Normal-approximation interval for the mean of a bounded statistic.
pub fn mean_interval(moments: &RunningMoments, confidence: f64) -> Result<IntervalEstimate> {
    check_confidence(confidence)?;
    if moments.n == 0 {
        return Err(Error::ZeroSamples);
    }
    let z = z_for_confidence(confidence);
    let se = if moments.n > 1 {
        (moments.variance() / moments.n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(IntervalEstimate {
        estimate: moments.mean,
        std_error: se,
        ci_low: moments.mean - z * se,
        ci_high: moments.mean + z * se,
        confidence,
        n: moments.n,
    })
}
