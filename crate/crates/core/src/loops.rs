//! Unit-loop ensembles: closed Gaussian loops with propertime `T = 1` and
//! vanishing center of mass.
//!
//! A loop of `N` points in `d` dimensions is sampled from the discrete measure
//! `exp(-(N/4) sum_k (y_{k+1} - y_k)^2)` with cyclic index `k` and zero center
//! of mass, independently per coordinate. The sampler draws `N` i.i.d.
//! increments of variance `2/N`, projects out their mean (which is exactly
//! the Gaussian conditioned on a closed path), integrates them and subtracts
//! the center of mass.
//!
//! Every loop is a pure function of `(seed, loop index, N, d)`: loop `l` uses
//! the ChaCha8 stream `l` of the generator seeded by `seed`, so sub-ensembles
//! can be produced independently and in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{self, JackknifeEstimate};

/// Tag stored in ensemble headers identifying the sampler.
pub const SAMPLER_TAG: [u8; 16] = *b"bridge-proj-v1\0\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopParams {
    pub n_loops: usize,
    pub n_points: usize,
    pub dim: usize,
    pub seed: u64,
}

impl LoopParams {
    pub fn new(n_loops: usize, n_points: usize, dim: usize, seed: u64) -> Result<Self> {
        let p = Self { n_loops, n_points, dim, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_loops < 1 {
            return Err(Error::InvalidParameter("need at least one loop".into()));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 points per loop, got {}",
                self.n_points
            )));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidParameter(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        Ok(())
    }
}

/// The RNG stream of loop `index`.
pub fn loop_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Write one unit loop into `out` (`n_points * dim` values, point-major).
pub fn sample_unit_loop(seed: u64, index: u64, n_points: usize, dim: usize, out: &mut [f64]) {
    assert_eq!(out.len(), n_points * dim);
    let mut rng = loop_rng(seed, index);
    let step = (2.0 / n_points as f64).sqrt();
    for v in out.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut rng);
        *v = g * step;
    }
    let n = n_points as f64;
    for c in 0..dim {
        let mean_inc = strided_sum(out, c, dim) / n;
        // out holds increments; turn them into positions in place while
        // accumulating their sum in the same blocks as `strided_sum`
        let mut partial = Vec::with_capacity(n_points / SUM_BLOCK + 1);
        let mut pos = 0.0;
        for chunk in out[c..].chunks_mut(SUM_BLOCK * dim) {
            let mut acc = 0.0;
            for v in chunk.iter_mut().step_by(dim) {
                let inc = *v - mean_inc;
                *v = pos;
                acc += pos;
                pos += inc;
            }
            partial.push(acc);
        }
        if n_points % SUM_BLOCK == 0 {
            partial.push(0.0);
        }
        let cm = stats::pairwise_sum(&partial) / n;
        for v in out[c..].iter_mut().step_by(dim) {
            *v -= cm;
        }
    }
}

const SUM_BLOCK: usize = 256;

fn strided_sum(values: &[f64], offset: usize, stride: usize) -> f64 {
    // blocked so rounding stays small for long loops
    let mut partial = Vec::with_capacity(values.len() / stride / SUM_BLOCK + 1);
    for chunk in values[offset..].chunks(SUM_BLOCK * stride) {
        partial.push(chunk.iter().step_by(stride).sum::<f64>());
    }
    if (values.len() / stride) % SUM_BLOCK == 0 {
        partial.push(0.0);
    }
    stats::pairwise_sum(&partial)
}

/// Anything that can hand out unit loops by index.
pub trait LoopSource: Sync {
    fn n_loops(&self) -> usize;
    fn n_points(&self) -> usize;
    fn dim(&self) -> usize;
    fn seed(&self) -> u64;

    /// Points of loop `index`, using `scratch` if the loop must be materialized.
    fn loop_points<'a>(&'a self, index: usize, scratch: &'a mut Vec<f64>) -> &'a [f64];
}

/// Loops generated on demand; nothing is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoopGenerator {
    params: LoopParams,
}

impl LoopGenerator {
    pub fn new(params: LoopParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> LoopParams {
        self.params
    }
}

impl LoopSource for LoopGenerator {
    fn n_loops(&self) -> usize {
        self.params.n_loops
    }
    fn n_points(&self) -> usize {
        self.params.n_points
    }
    fn dim(&self) -> usize {
        self.params.dim
    }
    fn seed(&self) -> u64 {
        self.params.seed
    }
    fn loop_points<'a>(&'a self, index: usize, scratch: &'a mut Vec<f64>) -> &'a [f64] {
        let len = self.params.n_points * self.params.dim;
        scratch.resize(len, 0.0);
        sample_unit_loop(self.params.seed, index as u64, self.params.n_points, self.params.dim, scratch);
        &scratch[..]
    }
}

/// An ensemble held in memory, `points[(l * N + k) * d + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitLoopEnsemble {
    pub(crate) n_loops: usize,
    pub(crate) n_points: usize,
    pub(crate) dim: usize,
    pub(crate) seed: u64,
    pub(crate) sampler: [u8; 16],
    pub(crate) points: Vec<f64>,
}

impl UnitLoopEnsemble {
    /// Generate `n_loops` loops; deterministic in all arguments and
    /// independent of the rayon pool size.
    pub fn generate(n_loops: usize, n_points: usize, dim: usize, seed: u64) -> Result<Self> {
        let params = LoopParams::new(n_loops, n_points, dim, seed)?;
        let stride = n_points * dim;
        let mut points = vec![0.0; n_loops * stride];
        points
            .par_chunks_mut(stride)
            .enumerate()
            .for_each(|(l, chunk)| sample_unit_loop(seed, l as u64, n_points, dim, chunk));
        Ok(Self {
            n_loops: params.n_loops,
            n_points,
            dim,
            seed,
            sampler: SAMPLER_TAG,
            points,
        })
    }

    /// Wrap raw coordinates (e.g. synthetic test loops). No CM is enforced.
    pub fn from_points(n_points: usize, dim: usize, points: Vec<f64>) -> Result<Self> {
        if n_points == 0 || dim == 0 || points.is_empty() || points.len() % (n_points * dim) != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into loops of {n_points} points in {dim} dimensions",
                points.len()
            )));
        }
        Ok(Self {
            n_loops: points.len() / (n_points * dim),
            n_points,
            dim,
            seed: 0,
            sampler: *b"explicit\0\0\0\0\0\0\0\0",
            points,
        })
    }

    pub fn sampler_tag(&self) -> [u8; 16] {
        self.sampler
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn loop_slice(&self, index: usize) -> &[f64] {
        let stride = self.n_points * self.dim;
        &self.points[index * stride..(index + 1) * stride]
    }

    pub fn iter_loops(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.n_points * self.dim)
    }

    /// Keep only coordinate `coord` of every point (e.g. the z components).
    pub fn project(&self, coords: &[usize]) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|&c| c >= self.dim) {
            return Err(Error::InvalidParameter(format!("bad projection {coords:?} of a {}-d ensemble", self.dim)));
        }
        let points = self
            .points
            .chunks_exact(self.dim)
            .flat_map(|p| coords.iter().map(move |&c| p[c]))
            .collect();
        Ok(Self {
            n_loops: self.n_loops,
            n_points: self.n_points,
            dim: coords.len(),
            seed: self.seed,
            sampler: self.sampler,
            points,
        })
    }
}

impl LoopSource for UnitLoopEnsemble {
    fn n_loops(&self) -> usize {
        self.n_loops
    }
    fn n_points(&self) -> usize {
        self.n_points
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn loop_points<'a>(&'a self, index: usize, _scratch: &'a mut Vec<f64>) -> &'a [f64] {
        self.loop_slice(index)
    }
}

pub fn generate_ensemble(n_loops: usize, n_points: usize, dim: usize, seed: u64) -> Result<UnitLoopEnsemble> {
    UnitLoopEnsemble::generate(n_loops, n_points, dim, seed)
}

/// Extent of a loop along its last coordinate (z): `max_k z_k - min_k z_k`.
pub fn loop_extent_z(points: &[f64], dim: usize) -> f64 {
    let (lo, hi) = points
        .iter()
        .skip(dim - 1)
        .step_by(dim)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| (lo.min(z), hi.max(z)));
    hi - lo
}

/// Minimal z (last) coordinate of a loop.
pub fn min_z(points: &[f64], dim: usize) -> f64 {
    points.iter().skip(dim - 1).step_by(dim).fold(f64::INFINITY, |m, &z| m.min(z))
}

/// Per-loop z extents of an ensemble with moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtentStats {
    pub extents: Vec<f64>,
}

impl ExtentStats {
    /// Extents along the last coordinate of every loop of `source`.
    pub fn compute<S: LoopSource>(source: &S) -> Self {
        let dim = source.dim();
        let extents = (0..source.n_loops())
            .into_par_iter()
            .map_init(Vec::new, |scratch, l| loop_extent_z(source.loop_points(l, scratch), dim))
            .collect();
        Self { extents }
    }

    /// Extents of every loop thinned to each stride in `strides`, in one pass.
    ///
    /// Every `m`-th point of an `N`-point loop is itself an exact `N/m`-point
    /// loop, so the results are nested ensembles at coarser resolutions.
    pub fn compute_nested<S: LoopSource>(source: &S, strides: &[usize]) -> Result<Vec<Self>> {
        let (n, dim) = (source.n_points(), source.dim());
        if let Some(&m) = strides.iter().find(|&&m| m == 0 || n % m != 0 || n / m < 2) {
            return Err(Error::InvalidParameter(format!("stride {m} does not divide N = {n} into >= 2 points")));
        }
        let per_loop: Vec<Vec<f64>> = (0..source.n_loops())
            .into_par_iter()
            .map_init(Vec::new, |scratch, l| {
                let pts = source.loop_points(l, scratch);
                strides
                    .iter()
                    .map(|&m| {
                        let (lo, hi) = pts[dim - 1..]
                            .iter()
                            .step_by(dim * m)
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| (lo.min(z), hi.max(z)));
                        hi - lo
                    })
                    .collect()
            })
            .collect();
        Ok((0..strides.len())
            .map(|i| Self { extents: per_loop.iter().map(|e| e[i]).collect() })
            .collect())
    }

    /// `<L^p>` with a blocked jackknife error.
    pub fn moment(&self, p: f64, n_blocks: usize) -> Result<JackknifeEstimate> {
        let powered: Vec<f64> = self.extents.iter().map(|l| l.powf(p)).collect();
        stats::blocked_mean(&powered, n_blocks)
    }
}

/// Minimal z of a loop rotated by angle `theta` about the y axis, tabulated on
/// `n_theta` nodes spanning `[0, pi]` (both ends included).
///
/// The rotation maps `e_z` onto `(sin theta, 0, cos theta)`, so the tabulated
/// quantity is `min_k (cos theta * z_k - sin theta * x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinZProfile {
    values: Vec<f64>,
}

impl MinZProfile {
    pub fn n_theta(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_angle(&self, j: usize) -> f64 {
        j as f64 * std::f64::consts::PI / (self.values.len() - 1) as f64
    }

    /// Linear interpolation between nodes; with `envelope` the smaller of the
    /// two neighbouring nodes is returned instead (biases `T_min` low).
    pub fn at(&self, theta: f64, envelope: bool) -> f64 {
        let n = self.values.len();
        let pos = (theta / std::f64::consts::PI).clamp(0.0, 1.0) * (n - 1) as f64;
        let j = (pos.floor() as usize).min(n - 2);
        let frac = pos - j as f64;
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        if frac == 0.0 {
            return v0;
        }
        if envelope {
            v0.min(v1)
        } else {
            v0 + frac * (v1 - v0)
        }
    }
}

/// Tabulate the rotated minimal z of a 2-d `(x, z)` or 3-d `(x, y, z)` loop.
pub fn build_min_z_profile(points: &[f64], dim: usize, n_theta: usize) -> Result<MinZProfile> {
    if n_theta < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 angle nodes, got {n_theta}")));
    }
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!("rotation profile needs d = 2 or 3, got {dim}")));
    }
    let projected: Vec<[f64; 2]> = points.chunks_exact(dim).map(|p| [p[0], p[dim - 1]]).collect();
    let hull = convex_hull(projected);
    let values = (0..n_theta)
        .map(|j| {
            let theta = j as f64 * std::f64::consts::PI / (n_theta - 1) as f64;
            let (s, c) = theta.sin_cos();
            hull.iter().fold(f64::INFINITY, |m, p| m.min(c * p[1] - s * p[0]))
        })
        .collect();
    Ok(MinZProfile { values })
}

/// Andrew's monotone chain; returns hull vertices (all points if degenerate).
pub(crate) fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_unstable_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(64);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Ensemble-level checks of the unit-loop measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDiagnostics {
    /// Point variance per coordinate pooled over coordinates (expect 1/6).
    pub variance: JackknifeEstimate,
    /// Variance of each coordinate separately.
    pub variance_per_coord: Vec<JackknifeEstimate>,
    /// Root mean square of adjacent-point increments per coordinate (expect sqrt(2/N)).
    pub rms_step: JackknifeEstimate,
    /// Largest `|mean| / max|y|` over loops and coordinates.
    pub max_cm_ratio: f64,
}

pub fn measure_diagnostics<S: LoopSource>(source: &S, n_blocks: usize) -> Result<MeasureDiagnostics> {
    let (n, d) = (source.n_points(), source.dim());
    // per loop: [var_c..., mean squared step pooled, cm ratio]
    let per_loop: Vec<(Vec<f64>, f64, f64)> = (0..source.n_loops())
        .into_par_iter()
        .map_init(Vec::new, |scratch, l| {
            let pts = source.loop_points(l, scratch);
            let max_abs = pts.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let mut vars = Vec::with_capacity(d);
            let mut step2 = 0.0;
            let mut cm_ratio = 0.0_f64;
            for c in 0..d {
                let mean = strided_sum(pts, c, d) / n as f64;
                if max_abs > 0.0 {
                    cm_ratio = cm_ratio.max(mean.abs() / max_abs);
                }
                let mut sq = 0.0;
                let mut st = 0.0;
                for k in 0..n {
                    let y = pts[k * d + c];
                    sq += (y - mean) * (y - mean);
                    let next = pts[((k + 1) % n) * d + c];
                    st += (next - y) * (next - y);
                }
                vars.push(sq / n as f64);
                step2 += st / n as f64;
            }
            (vars, step2 / d as f64, cm_ratio)
        })
        .collect();

    let pooled: Vec<f64> = per_loop.iter().map(|(v, _, _)| v.iter().sum::<f64>() / d as f64).collect();
    let variance = stats::blocked_mean(&pooled, n_blocks)?;
    let variance_per_coord = (0..d)
        .map(|c| {
            let col: Vec<f64> = per_loop.iter().map(|(v, _, _)| v[c]).collect();
            stats::blocked_mean(&col, n_blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    let steps: Vec<f64> = per_loop.iter().map(|(_, s, _)| *s).collect();
    let n_loops = steps.len();
    let rms_step = stats::jackknife_with(n_loops, n_blocks, |excluded| {
        let kept: Vec<f64> = steps[..excluded.start].iter().chain(&steps[excluded.end..]).copied().collect();
        stats::pairwise_mean(&kept).sqrt()
    })?;
    let max_cm_ratio = per_loop.iter().fold(0.0_f64, |m, (_, _, r)| m.max(*r));
    Ok(MeasureDiagnostics {
        variance,
        variance_per_coord,
        rms_step,
        max_cm_ratio,
    })
}

/// Exact finite-`N` expectation of the per-coordinate point variance.
pub fn exact_point_variance(n_points: usize) -> f64 {
    let n = n_points as f64;
    (n * n - 1.0) / (6.0 * n * n)
}

/// Exact finite-`N` expectation of the rms adjacent step per coordinate.
///
/// Closing the loop removes one of the `N` increment degrees of freedom, so
/// the mean squared step is `2 (N - 1) / N^2`.
pub fn exact_rms_step(n_points: usize) -> f64 {
    let n = n_points as f64;
    (2.0 * (n - 1.0)).sqrt() / n
}
