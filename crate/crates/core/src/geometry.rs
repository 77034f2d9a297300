//! Ball (sphere or circle) of radius `R` centered at the origin above the
//! plate `z = -(R + a)`, in 2 or 3 dimensions. `z` is the last coordinate.
//!
//! These are the direct, point-by-point forms of the support construction.
//! The Monte Carlo engine uses the tree-accelerated equivalents in [`crate::bvh`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loops::{self, LoopSource};
use crate::stats::{self, DEFAULT_BLOCKS};
use crate::support::{Interval, IntervalSet};

/// `1 / (32 pi^2)`, the prefactor of the Dirichlet interaction energy density.
pub const DENSITY_PREFACTOR: f64 = 1.0 / (32.0 * PI * PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallPlate {
    pub radius: f64,
    pub gap: f64,
}

impl BallPlate {
    pub fn new(radius: f64, gap: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::InvalidParameter(format!("gap must be positive, got {gap}")));
        }
        Ok(Self { radius, gap })
    }

    /// Height of the plate plane.
    pub fn plate_z(&self) -> f64 {
        -(self.radius + self.gap)
    }

    /// `T` at which the lowest loop point reaches the plate; 0 if the center
    /// is on or below the plate, infinite if the loop never gets below it.
    pub fn t_min_plate(&self, x_z: f64, min_z: f64) -> f64 {
        let dz = self.radius + self.gap + x_z;
        if dz <= 0.0 {
            0.0
        } else if min_z >= 0.0 {
            f64::INFINITY
        } else {
            let s = dz / min_z;
            s * s
        }
    }

    fn check_dim(x: &[f64], points: &[f64]) -> usize {
        let d = x.len();
        assert!((2..=3).contains(&d) && points.len() % d == 0, "point dimensions disagree");
        d
    }

    /// Largest `T` with a loop point inside the ball, for `|x| <= R`.
    pub fn t_max_inside(&self, x: &[f64], points: &[f64]) -> Result<f64> {
        let d = Self::check_dim(x, points);
        let c = dot(x, x) - self.radius * self.radius;
        if c > 0.0 {
            return Err(Error::InvalidParameter("center of mass outside the ball".into()));
        }
        let best = points
            .chunks_exact(d)
            .filter_map(|y| roots(x, c, y))
            .map(|(_, sp)| sp * sp)
            .fold(0.0, f64::max);
        Ok(best)
    }

    /// Indices of points heading into the ball from an outside `x`.
    pub fn filter_relevant_points(&self, x: &[f64], points: &[f64]) -> Vec<usize> {
        let d = Self::check_dim(x, points);
        let x2 = dot(x, x);
        let r2 = self.radius * self.radius;
        points
            .chunks_exact(d)
            .enumerate()
            .filter(|(_, y)| {
                let xy = dot(x, y);
                let y2 = dot(y, y);
                xy < 0.0 && x2 - xy * xy / y2 < r2
            })
            .map(|(k, _)| k)
            .collect()
    }

    /// Propertime interval `[T-, T+]` during which `x + sqrt(T) y` is in the ball.
    pub fn t_pm_roots(&self, x: &[f64], y: &[f64]) -> Option<Interval> {
        let c = dot(x, x) - self.radius * self.radius;
        let (sm, sp) = roots(x, c, y)?;
        if sp < 0.0 {
            return None;
        }
        let sm = sm.max(0.0);
        Some(Interval { lo: sm * sm, hi: sp * sp })
    }

    /// Union of the point intervals, without the plate bound.
    pub fn sphere_union(&self, x: &[f64], points: &[f64]) -> IntervalSet {
        let d = Self::check_dim(x, points);
        let ivs = self
            .filter_relevant_points(x, points)
            .into_iter()
            .filter_map(|k| self.t_pm_roots(x, &points[k * d..(k + 1) * d]))
            .collect();
        IntervalSet::from_unchecked(ivs)
    }

    /// `S = [T_min, ∞) ∩ ⋃_k [T-_k, T+_k]` for `|x| > R`.
    pub fn loop_support_outside(&self, x: &[f64], points: &[f64]) -> IntervalSet {
        let d = Self::check_dim(x, points);
        let t_min = self.t_min_plate(x[d - 1], loops::min_z(points, d));
        self.sphere_union(x, points).clip_from_below(t_min)
    }

    /// Per-loop density term at any `x` (inside or outside the ball).
    pub fn loop_density(&self, x: &[f64], points: &[f64]) -> Result<f64> {
        let d = Self::check_dim(x, points);
        if dot(x, x) <= self.radius * self.radius {
            let t_min = self.t_min_plate(x[d - 1], loops::min_z(points, d));
            let t_max = self.t_max_inside(x, points)?;
            Ok(inside_term(t_min, t_max))
        } else {
            Ok(-DENSITY_PREFACTOR * self.loop_support_outside(x, points).integrate_inv_t3()?)
        }
    }

    /// Per-loop term of the small-distance form: `S` replaced by
    /// `[min S, ∞)`; loops with empty support contribute nothing.
    pub fn loop_density_small_distance(&self, x: &[f64], points: &[f64]) -> Result<f64> {
        let d = Self::check_dim(x, points);
        let t_min = self.t_min_plate(x[d - 1], loops::min_z(points, d));
        let lower = if dot(x, x) <= self.radius * self.radius {
            let t_max = self.t_max_inside(x, points)?;
            (t_max > t_min).then_some(t_min)
        } else {
            self.sphere_union(x, points).clip_from_below(t_min).lower_bound()
        };
        match lower {
            Some(t) if t > 0.0 => Ok(-0.5 * DENSITY_PREFACTOR / (t * t)),
            Some(_) => Err(Error::Divergent),
            None => Ok(0.0),
        }
    }
}

/// `(1/64 pi^2)(1/T_max^2 - 1/T_min^2) θ(T_max - T_min)`.
pub fn inside_term(t_min: f64, t_max: f64) -> f64 {
    if t_max > t_min {
        0.5 * DENSITY_PREFACTOR * (1.0 / (t_max * t_max) - 1.0 / (t_min * t_min))
    } else {
        0.0
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn roots(x: &[f64], c: f64, y: &[f64]) -> Option<(f64, f64)> {
    match x.len() {
        2 => crate::bvh::ball_roots::<2>(x.try_into().unwrap(), c, y.try_into().unwrap()),
        3 => crate::bvh::ball_roots::<3>(x.try_into().unwrap(), c, y.try_into().unwrap()),
        _ => unreachable!(),
    }
}

/// Energy density with its jackknife error at one center of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    /// Distance from the symmetry axis (`|x|` in 2-d).
    pub rho: f64,
    pub z: f64,
    pub eps: f64,
    pub eps_err: f64,
}

/// Ensemble mean of a per-loop statistic with its blocked jackknife error.
pub(crate) fn ensemble_mean<S, F>(source: &S, per_loop: F) -> Result<(f64, f64)>
where
    S: LoopSource,
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    let values = (0..source.n_loops())
        .into_par_iter()
        .map_init(Vec::new, |scratch, l| per_loop(source.loop_points(l, scratch)))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() < 2 {
        return Ok((stats::pairwise_mean(&values), 0.0));
    }
    let est = stats::blocked_mean(&values, DEFAULT_BLOCKS)?;
    Ok((est.value, est.error))
}

pub(crate) fn sample_at(x: &[f64], (eps, eps_err): (f64, f64)) -> DensitySample {
    let d = x.len();
    DensitySample {
        rho: dot(&x[..d - 1], &x[..d - 1]).sqrt(),
        z: x[d - 1],
        eps,
        eps_err,
    }
}

/// Densities along angles `theta` in `[0, pi]` (measured from `+z` towards
/// `+x`) at fixed `|x| = r > R`,
/// with the loop rotated onto the center-of-mass direction so the ball union
/// is computed once per loop. The plate bound comes from the loop's rotated
/// minimal-z profile.
pub fn density_outside_rotated<S: LoopSource>(
    geom: &BallPlate,
    r: f64,
    angles: &[f64],
    source: &S,
    n_theta: usize,
    envelope: bool,
) -> Result<Vec<DensitySample>> {
    use rayon::prelude::*;
    if r <= geom.radius {
        return Err(Error::InvalidParameter(format!("r = {r} is not outside the ball")));
    }
    if let Some(th) = angles.iter().find(|th| !(0.0..=PI).contains(*th)) {
        return Err(Error::InvalidParameter(format!("angle {th} outside [0, pi]")));
    }
    let d = source.dim();
    if !(2..=3).contains(&d) {
        return Err(Error::DimensionMismatch { expected: 3, found: d });
    }
    let mut x = vec![0.0; d];
    x[d - 1] = r;
    let per_loop: Vec<Vec<f64>> = (0..source.n_loops())
        .into_par_iter()
        .map_init(Vec::new, |scratch, l| {
            let pts = source.loop_points(l, scratch);
            let union = geom.sphere_union(&x, pts);
            let profile = loops::build_min_z_profile(pts, d, n_theta)?;
            angles
                .iter()
                .map(|&th| {
                    let t_min = geom.t_min_plate(r * th.cos(), profile.at(th, envelope));
                    Ok(-DENSITY_PREFACTOR * union.clip_from_below(t_min).integrate_inv_t3()?)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    angles
        .iter()
        .enumerate()
        .map(|(j, &th)| {
            let column: Vec<f64> = per_loop.iter().map(|v| v[j]).collect();
            let (eps, err) = if column.len() < 2 {
                (stats::pairwise_mean(&column), 0.0)
            } else {
                let e = stats::blocked_mean(&column, DEFAULT_BLOCKS)?;
                (e.value, e.error)
            };
            let mut pos = vec![0.0; d];
            pos[0] = r * th.sin();
            pos[d - 1] = r * th.cos();
            Ok(DensitySample {
                rho: pos[0].abs(),
                z: pos[d - 1],
                eps,
                eps_err: err,
            })
        })
        .collect()
}
