//! Half-open energy intervals [lo, hi).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::EmptyInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn contains(&self, e: f64) -> bool {
        self.lo <= e && e < self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }
}

/// A finite family of intervals with its disjointness cached; several bounds
/// are only claimed for disjoint families, so callers ask before applying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
    disjoint: bool,
}

impl IntervalSet {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::IntervalCountMismatch { got: 0, expected: 1 });
        }
        for iv in &intervals {
            Interval::new(iv.lo, iv.hi)?;
        }
        let mut sorted = intervals.clone();
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let disjoint = sorted.windows(2).all(|w| w[0].hi <= w[1].lo);
        Ok(Self { intervals, disjoint })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn disjoint(&self) -> bool {
        self.disjoint
    }

    pub fn length_product(&self) -> f64 {
        self.intervals.iter().map(Interval::len).product()
    }
}
