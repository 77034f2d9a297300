//! Propertime interval arithmetic.
//!
//! The support of a loop's intersection functional on the `T` axis is a finite
//! union of closed intervals. On that support the integrand is `1/T^3`, so the
//! `T` integral is done in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed propertime interval `[lo, hi]`; `hi` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let iv = Self { lo, hi };
        iv.validate()?;
        Ok(iv)
    }

    pub fn unbounded(lo: f64) -> Self {
        Self { lo, hi: f64::INFINITY }
    }

    fn validate(&self) -> Result<()> {
        if self.lo.is_nan() || self.hi.is_nan() || self.lo < 0.0 || self.lo > self.hi || self.lo.is_infinite() {
            return Err(Error::MalformedInterval { lo: self.lo, hi: self.hi });
        }
        Ok(())
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi == f64::INFINITY
    }

    /// `int_lo^hi dT / T^3`; zero-width intervals contribute nothing.
    pub fn integral_inv_t3(&self) -> Result<f64> {
        if self.hi <= self.lo {
            return Ok(0.0);
        }
        if self.lo == 0.0 {
            return Err(Error::Divergent);
        }
        Ok(0.5 * (1.0 / (self.lo * self.lo) - 1.0 / (self.hi * self.hi)))
    }
}

/// Sorted, pairwise-disjoint intervals with strict gaps between neighbours.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter()
    }

    pub fn contains(&self, t: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.hi < t);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(t))
    }

    /// Smallest element of the set, if any.
    pub fn lower_bound(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.lo)
    }

    /// Build from intervals already known to be well formed; sorts and merges.
    pub(crate) fn from_unchecked(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_unstable_by(|a, b| a.lo.total_cmp(&b.lo));
        merge_sorted(&mut intervals);
        Self { intervals }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = Vec::with_capacity(self.len() + other.len());
        all.extend_from_slice(&self.intervals);
        all.extend_from_slice(&other.intervals);
        Self::from_unchecked(all)
    }

    /// `self ∩ [t_min, ∞)`.
    pub fn clip_from_below(&self, t_min: f64) -> IntervalSet {
        let start = self.intervals.partition_point(|iv| iv.hi < t_min);
        let mut out: Vec<Interval> = self.intervals[start..].to_vec();
        if let Some(first) = out.first_mut() {
            first.lo = first.lo.max(t_min);
        }
        IntervalSet { intervals: out }
    }

    /// `self ∩ [0, t_max]`.
    pub fn clip_from_above(&self, t_max: f64) -> IntervalSet {
        let end = self.intervals.partition_point(|iv| iv.lo <= t_max);
        let mut out: Vec<Interval> = self.intervals[..end].to_vec();
        if let Some(last) = out.last_mut() {
            last.hi = last.hi.min(t_max);
        }
        IntervalSet { intervals: out }
    }

    /// `sum_i 1/2 (1/lo_i^2 - 1/hi_i^2)`.
    pub fn integrate_inv_t3(&self) -> Result<f64> {
        self.intervals
            .iter()
            .try_fold(0.0, |acc, iv| Ok(acc + iv.integral_inv_t3()?))
    }
}

/// In-place merge of intervals sorted by `lo`; touching intervals merge.
fn merge_sorted(intervals: &mut Vec<Interval>) {
    if intervals.is_empty() {
        return;
    }
    let mut w = 0;
    for r in 1..intervals.len() {
        let next = intervals[r];
        if next.lo <= intervals[w].hi {
            if next.hi > intervals[w].hi {
                intervals[w].hi = next.hi;
            }
        } else {
            w += 1;
            intervals[w] = next;
        }
    }
    intervals.truncate(w + 1);
}

/// Minimal sorted disjoint cover of the union of `intervals`, `O(n log n)`.
pub fn union_of_intervals(intervals: &[Interval]) -> Result<IntervalSet> {
    for iv in intervals {
        iv.validate()?;
    }
    Ok(IntervalSet::from_unchecked(intervals.to_vec()))
}

pub fn clip_from_below(set: &IntervalSet, t_min: f64) -> IntervalSet {
    set.clip_from_below(t_min)
}

pub fn integrate_inv_t3(set: &IntervalSet) -> Result<f64> {
    set.integrate_inv_t3()
}
