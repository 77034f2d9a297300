//! Jackknife error estimation, deterministic summation and the constrained
//! polynomial fits used for normalized-energy scans.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block count used when nothing else is requested.
pub const DEFAULT_BLOCKS: usize = 50;

/// Fixed-order pairwise (cascade) summation.
///
/// The association order depends only on the slice length, so a parallel map
/// followed by this reduction is bit-identical for any worker count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 8;
    if values.len() <= BASE {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JackknifeEstimate {
    pub value: f64,
    pub error: f64,
    pub blocks: usize,
}

impl JackknifeEstimate {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error: self.error * factor.abs(),
            blocks: self.blocks,
        }
    }
}

/// Jackknife of the mean over per-block values.
pub fn jackknife(block_values: &[f64]) -> Result<JackknifeEstimate> {
    let n = block_values.len();
    if n < 2 {
        return Err(Error::TooFewBlocks(n));
    }
    let total = pairwise_sum(block_values);
    let replicates: Vec<f64> = block_values
        .iter()
        .map(|v| (total - v) / (n - 1) as f64)
        .collect();
    from_replicates(&replicates)
}

/// Combine leave-one-block-out estimates `theta_i` into a jackknife estimate.
pub fn from_replicates(replicates: &[f64]) -> Result<JackknifeEstimate> {
    let n = replicates.len();
    if n < 2 {
        return Err(Error::TooFewBlocks(n));
    }
    let mean = pairwise_mean(replicates);
    let dev: Vec<f64> = replicates.iter().map(|t| (t - mean) * (t - mean)).collect();
    let var = (n - 1) as f64 / n as f64 * pairwise_sum(&dev);
    Ok(JackknifeEstimate {
        value: mean,
        error: var.sqrt(),
        blocks: n,
    })
}

/// Jackknife an arbitrary statistic over `n_items` split into `n_blocks`
/// contiguous blocks. `statistic` receives the excluded index range.
pub fn jackknife_with<F>(n_items: usize, n_blocks: usize, statistic: F) -> Result<JackknifeEstimate>
where
    F: Fn(Range<usize>) -> f64,
{
    let ranges = block_ranges(n_items, n_blocks);
    if ranges.len() < 2 {
        return Err(Error::TooFewBlocks(ranges.len()));
    }
    let replicates: Vec<f64> = ranges.into_iter().map(statistic).collect();
    from_replicates(&replicates)
}

/// Split `0..n_items` into at most `n_blocks` contiguous, nonempty, nearly
/// equal ranges.
pub fn block_ranges(n_items: usize, n_blocks: usize) -> Vec<Range<usize>> {
    let n_blocks = n_blocks.min(n_items);
    if n_blocks == 0 {
        return Vec::new();
    }
    (0..n_blocks)
        .map(|b| (b * n_items / n_blocks)..((b + 1) * n_items / n_blocks))
        .collect()
}

/// Mean of per-item values with a blocked jackknife error.
pub fn blocked_mean(values: &[f64], n_blocks: usize) -> Result<JackknifeEstimate> {
    let sums: Vec<f64> = block_ranges(values.len(), n_blocks)
        .into_iter()
        .map(|r| pairwise_sum(&values[r]))
        .collect();
    if sums.len() < 2 {
        return Err(Error::TooFewBlocks(sums.len()));
    }
    let total = pairwise_sum(&sums);
    let ranges = block_ranges(values.len(), n_blocks);
    let replicates: Vec<f64> = sums
        .iter()
        .zip(&ranges)
        .map(|(s, r)| (total - s) / (values.len() - r.len()) as f64)
        .collect();
    from_replicates(&replicates)
}

/// Result of a weighted fit of `p(x) = 1 + c1 x (+ c2 x^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2_per_dof: Option<f64>,
}

impl FitResult {
    pub fn eval(&self, x: f64) -> f64 {
        let mut p = 1.0;
        let mut xp = 1.0;
        for c in &self.coefficients {
            xp *= x;
            p += c * xp;
        }
        p
    }

    pub fn residuals(&self, points: &[FitPoint]) -> Vec<f64> {
        points.iter().map(|p| (p.y - self.eval(p.x)) / p.sigma).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

/// Weighted least squares of `y - 1` on `(x, x^2)` with the intercept pinned
/// to the exactly known `p(0) = 1`.
pub fn constrained_fit(points: &[FitPoint], order: usize) -> Result<FitResult> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidParameter(format!("fit order {order}, expected 1 or 2")));
    }
    if points.len() < order {
        return Err(Error::SingularFit);
    }
    for p in points {
        if !(p.x > 0.0 && p.x < 0.1) {
            return Err(Error::FitRange(p.x));
        }
        if !(p.sigma > 0.0) || !p.y.is_finite() {
            return Err(Error::InvalidParameter(format!("bad fit point {p:?}")));
        }
    }
    let n = points.len();
    let design = DMatrix::from_fn(n, order, |i, j| points[i].x.powi(j as i32 + 1) / points[i].sigma);
    let rhs = DVector::from_iterator(n, points.iter().map(|p| (p.y - 1.0) / p.sigma));
    let normal = design.transpose() * &design;

    let eig = SymmetricEigen::new(normal.clone());
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min_ev = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max_ev > 0.0) || min_ev <= max_ev * 1e-12 {
        return Err(Error::SingularFit);
    }
    let cov = normal.try_inverse().ok_or(Error::SingularFit)?;
    let coef = &cov * (design.transpose() * &rhs);

    let resid = &rhs - &design * &coef;
    let chi2 = resid.norm_squared();
    let dof = n - order;
    Ok(FitResult {
        order,
        coefficients: coef.iter().copied().collect(),
        errors: (0..order).map(|i| cov[(i, i)].sqrt()).collect(),
        covariance: (0..order).map(|i| (0..order).map(|j| cov[(i, j)]).collect()).collect(),
        chi2_per_dof: (dof > 0).then(|| chi2 / dof as f64),
    })
}

/// Weighted straight line `y = intercept + slope x` with free intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_err: f64,
    pub slope_err: f64,
    pub chi2_per_dof: Option<f64>,
}

pub fn linear_fit(points: &[FitPoint]) -> Result<LineFit> {
    for p in points {
        if !(p.sigma > 0.0) || !p.y.is_finite() || !p.x.is_finite() {
            return Err(Error::InvalidParameter(format!("bad fit point {p:?}")));
        }
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = 1.0 / (p.sigma * p.sigma);
        s += w;
        sx += w * p.x;
        sy += w * p.y;
        sxx += w * p.x * p.x;
        sxy += w * p.x * p.y;
    }
    let det = s * sxx - sx * sx;
    if points.len() < 2 || !(det > 1e-12 * s * sxx) {
        return Err(Error::SingularFit);
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = points
        .iter()
        .map(|p| ((p.y - intercept - slope * p.x) / p.sigma).powi(2))
        .sum();
    let dof = points.len() - 2;
    Ok(LineFit {
        intercept,
        slope,
        intercept_err: (sxx / det).sqrt(),
        slope_err: (s / det).sqrt(),
        chi2_per_dof: (dof > 0).then(|| chi2 / dof as f64),
    })
}
