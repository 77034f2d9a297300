//! Interaction energy `E = ∫ d^D x ε(x)` of a ball above a plate.
//!
//! The center-of-mass integral is estimated per loop by importance sampling:
//! each loop is placed in `orientations` random orientations (applied to the
//! geometry, not the loop) and evaluated at `samples` random centers of mass
//! drawn from a proposal concentrated in the gap. Per-loop estimates are
//! unbiased for the per-loop energy, so the ensemble mean and its jackknife
//! error follow directly. Optionally the low Fourier-mode powers of the loop
//! along the plate normal, whose distribution is known exactly, serve as
//! control variates.
//!
//! Each loop's random numbers come from its own counter-based stream and all
//! reductions are pairwise in loop order, so results do not depend on the
//! number of worker threads.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvh::{dot, LoopTree};
use crate::error::{Error, Result};
use crate::geometry::{BallPlate, DENSITY_PREFACTOR};
use crate::loops::LoopSource;
use crate::stats::{self, JackknifeEstimate};

const SAMPLING_TAG: u64 = 0x9e37_79b9_7f4a_7c15;
/// Features along the plate normal: g, g², g³, P1, P2, P3, P1², with `g` the
/// normalized point variance and `P_m` the normalized mode powers.
const N_FEATURES: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact support at every sampled center of mass.
    Full,
    /// Support replaced by `[min S, ∞)`.
    SmallDistance,
    /// Ball union computed once per `|x|` with the loop rotated onto `x`.
    Rotated,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Full => "full",
            Method::SmallDistance => "small-distance",
            Method::Rotated => "rotated",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Method::Full),
            "small-distance" | "sd" => Ok(Method::SmallDistance),
            "rotated" => Ok(Method::Rotated),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Settings of the center-of-mass integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Forced method; `None` dispatches on `a/R`.
    pub method: Option<Method>,
    /// Use the small-distance form below this `a/R`.
    pub small_distance_below: f64,
    /// Use the rotated form above this `a/R`.
    pub rotated_above: f64,
    /// Random orientations per loop.
    pub orientations: usize,
    /// Centers of mass per orientation (radii for the rotated form).
    pub samples: usize,
    /// Rotated form: angles per radius.
    pub angles: usize,
    /// Rotated form: centers of mass inside the ball per orientation.
    pub interior_samples: usize,
    /// Probability of drawing from the gap component of the proposal.
    pub gap_fraction: f64,
    /// Lateral width of the gap component in units of `sqrt(2 R a)`.
    pub gap_width: f64,
    pub control_variates: bool,
    pub blocks: usize,
    /// Warn when the relative error exceeds this.
    pub target_rel_error: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: None,
            small_distance_below: 0.02,
            rotated_above: 2.0,
            orientations: 8,
            samples: 8,
            angles: 8,
            interior_samples: 2,
            gap_fraction: 0.8,
            gap_width: 1.0,
            control_variates: true,
            blocks: stats::DEFAULT_BLOCKS,
            target_rel_error: 0.05,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.orientations == 0 || self.samples == 0 || self.angles == 0 {
            return bad("orientations, samples and angles must be positive");
        }
        if !(0.0..=1.0).contains(&self.gap_fraction) {
            return bad("gap fraction must lie in [0, 1]");
        }
        if !(self.gap_width > 0.0) {
            return bad("gap width must be positive");
        }
        if self.blocks < 2 {
            return bad("need at least 2 jackknife blocks");
        }
        Ok(())
    }

    pub fn method_for(&self, ratio: f64) -> Method {
        self.method.unwrap_or(if ratio < self.small_distance_below {
            Method::SmallDistance
        } else if ratio > self.rotated_above {
            Method::Rotated
        } else {
            Method::Full
        })
    }
}

/// Raw outcome for one geometry.
#[derive(Debug, Clone)]
pub(crate) struct EngineOutput {
    pub energy: JackknifeEstimate,
    pub method: Method,
    pub warnings: Vec<String>,
}

/// Orthonormal frame: row `j` is the lab axis `e_j` expressed in the loop frame.
type Frame<const D: usize> = [[f64; D]; D];

fn random_frame<const D: usize>(rng: &mut ChaCha8Rng) -> Frame<D> {
    let mut f = [[0.0; D]; D];
    match D {
        2 => {
            let phi = 2.0 * PI * rng.random::<f64>();
            let (s, c) = phi.sin_cos();
            f[0][0] = c;
            f[0][1] = s;
            f[1][0] = -s;
            f[1][1] = c;
        }
        3 => {
            let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            let [w, x, y, z] = q.map(|v| v / n);
            let m = [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    f[i][j] = m[i][j];
                }
            }
        }
        _ => unreachable!("frames exist for D = 2, 3"),
    }
    f
}

fn to_loop_frame<const D: usize>(frame: &Frame<D>, x: &[f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for j in 0..D {
        for c in 0..D {
            out[c] += x[j] * frame[j][c];
        }
    }
    out
}

/// Low Fourier modes `c_m = (1/N) sum_k y_k e^{-2 pi i m k / N}`, `m = 1..3`.
pub(crate) struct Modes<const D: usize> {
    re: [[f64; D]; 3],
    im: [[f64; D]; 3],
    /// `E |c_m . n|^2 = 1 / (2 N^2 sin^2(pi m / N))` for a unit vector `n`.
    expected: [f64; 3],
}

impl<const D: usize> Modes<D> {
    pub fn new(points: &[[f64; D]]) -> Self {
        let n = points.len();
        let mut re = [[0.0; D]; 3];
        let mut im = [[0.0; D]; 3];
        let step = -2.0 * PI / n as f64;
        let (ws, wc) = step.sin_cos();
        let (mut cr, mut ci) = (1.0, 0.0);
        for (k, p) in points.iter().enumerate() {
            if k % 512 == 0 {
                let (s, c) = (step * k as f64).sin_cos();
                cr = c;
                ci = s;
            }
            let (c2r, c2i) = (cr * cr - ci * ci, 2.0 * cr * ci);
            let (c3r, c3i) = (c2r * cr - c2i * ci, c2r * ci + c2i * cr);
            for c in 0..D {
                re[0][c] += p[c] * cr;
                im[0][c] += p[c] * ci;
                re[1][c] += p[c] * c2r;
                im[1][c] += p[c] * c2i;
                re[2][c] += p[c] * c3r;
                im[2][c] += p[c] * c3i;
            }
            (cr, ci) = (cr * wc - ci * ws, cr * ws + ci * wc);
        }
        let nf = n as f64;
        for m in 0..3 {
            for c in 0..D {
                re[m][c] /= nf;
                im[m][c] /= nf;
            }
        }
        let expected = std::array::from_fn(|m| {
            let s = (PI * (m + 1) as f64 / nf).sin();
            1.0 / (2.0 * nf * nf * s * s)
        });
        Self { re, im, expected }
    }

    /// Normalized mode powers along `n`; each is exactly `Exp(1)` distributed.
    pub fn powers(&self, n: &[f64; D]) -> [f64; 3] {
        std::array::from_fn(|m| {
            let r = dot(&self.re[m], n);
            let i = dot(&self.im[m], n);
            (r * r + i * i) / self.expected[m]
        })
    }
}

fn features(g: f64, p: [f64; 3]) -> [f64; N_FEATURES] {
    [g, g * g, g * g * g, p[0], p[1], p[2], p[0] * p[0]]
}

/// Exact expectations of the features for `N`-point loops.
///
/// Along a unit vector the point variance is `G = sum_{m=1}^{N-1} |c_m|^2`;
/// conjugate pairs contribute independent `2 e_m Exp(1)` terms and the
/// Nyquist mode (even `N`) an `e chi^2_1` term, so its cumulants are sums.
fn feature_means(n_points: usize) -> [f64; N_FEATURES] {
    let n = n_points as f64;
    let e = |m: usize| {
        let s = (PI * m as f64 / n).sin();
        1.0 / (2.0 * n * n * s * s)
    };
    let mut k = [0.0; 4];
    for m in 1..=(n_points - 1) / 2 {
        let t = 2.0 * e(m);
        k[1] += t;
        k[2] += t * t;
        k[3] += 2.0 * t * t * t;
    }
    if n_points % 2 == 0 {
        let t = e(n_points / 2);
        k[1] += t;
        k[2] += 2.0 * t * t;
        k[3] += 8.0 * t * t * t;
    }
    let (k1, k2, k3) = (k[1], k[2] / (k[1] * k[1]), k[3] / (k[1] * k[1] * k[1]));
    debug_assert!(k1 > 0.0);
    [1.0, k2 + 1.0, k3 + 3.0 * k2 + 1.0, 1.0, 1.0, 1.0, 2.0]
}

/// Mean point variance along a unit vector, `(N^2 - 1) / (6 N^2)`.
fn mean_point_variance(n_points: usize) -> f64 {
    let n = n_points as f64;
    (n * n - 1.0) / (6.0 * n * n)
}

/// Second-moment matrix `(1/N) sum_k y_k y_k^T` of a loop.
fn second_moments<const D: usize>(points: &[[f64; D]]) -> [[f64; D]; D] {
    let mut m = [[0.0; D]; D];
    for p in points {
        for i in 0..D {
            for j in 0..D {
                m[i][j] += p[i] * p[j];
            }
        }
    }
    let n = points.len() as f64;
    m.map(|row| row.map(|v| v / n))
}

/// Student-t density with three degrees of freedom.
fn t3_pdf(t: f64) -> f64 {
    let u = 1.0 + t * t / 3.0;
    2.0 / (PI * 3f64.sqrt() * u * u)
}

/// Mixture proposal for centers of mass: a gap component following the
/// local gap height `h(rho) = a + rho^2 / 2R`, and a heavy-tailed isotropic
/// component around the gap midpoint.
struct Proposal<const D: usize> {
    radius: f64,
    gap: f64,
    w_gap: f64,
    /// Lateral scale of the gap component.
    s_lat: f64,
    /// Radial scale of the bulk component.
    s_bulk: f64,
    center: [f64; D],
    t3: StudentT<f64>,
}

const GAP_LOC: f64 = 0.5;
const GAP_SCALE: f64 = 0.5;

impl<const D: usize> Proposal<D> {
    fn new(g: &BallPlate, spec: &QuadratureSpec) -> Self {
        let (r, a) = (g.radius, g.gap);
        let mut center = [0.0; D];
        center[D - 1] = -(r + 0.5 * a);
        Self {
            radius: r,
            gap: a,
            w_gap: spec.gap_fraction,
            s_lat: (2.0 * r * a * spec.gap_width).sqrt(),
            s_bulk: (2.0 * r * a).sqrt() + a,
            center,
            t3: StudentT::new(3.0).unwrap(),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ([f64; D], f64) {
        let x = if rng.random::<f64>() < self.w_gap {
            self.sample_gap(rng)
        } else {
            self.sample_bulk(rng)
        };
        let q = self.w_gap * self.pdf_gap(&x) + (1.0 - self.w_gap) * self.pdf_bulk(&x);
        (x, q)
    }

    fn height(&self, rho2: f64) -> f64 {
        self.gap + rho2 / (2.0 * self.radius)
    }

    fn sample_gap(&self, rng: &mut ChaCha8Rng) -> [f64; D] {
        let mut x = [0.0; D];
        let rho2 = if D == 3 {
            let u: f64 = rng.random();
            let rho2 = self.s_lat * self.s_lat * u / (1.0 - u);
            let phi = 2.0 * PI * rng.random::<f64>();
            let (s, c) = phi.sin_cos();
            let rho = rho2.sqrt();
            x[0] = rho * c;
            x[1] = rho * s;
            rho2
        } else {
            x[0] = self.s_lat * self.t3.sample(rng);
            x[0] * x[0]
        };
        let h = self.height(rho2);
        let t: f64 = self.t3.sample(rng);
        x[D - 1] = -(self.radius + self.gap) + h * (GAP_LOC + GAP_SCALE * t);
        x
    }

    fn pdf_gap(&self, x: &[f64; D]) -> f64 {
        let rho2: f64 = x[..D - 1].iter().map(|v| v * v).sum();
        let lateral = if D == 3 {
            let s2 = self.s_lat * self.s_lat;
            s2 / (PI * (s2 + rho2) * (s2 + rho2))
        } else {
            t3_pdf(x[0] / self.s_lat) / self.s_lat
        };
        let h = self.height(rho2);
        let zeta = x[D - 1] + self.radius + self.gap;
        lateral * t3_pdf((zeta / h - GAP_LOC) / GAP_SCALE) / (GAP_SCALE * h)
    }

    fn sample_bulk(&self, rng: &mut ChaCha8Rng) -> [f64; D] {
        let u: f64 = rng.random();
        let r = self.s_bulk * u / (1.0 - u);
        let dir = random_direction::<D>(rng);
        std::array::from_fn(|c| self.center[c] + r * dir[c])
    }

    fn pdf_bulk(&self, x: &[f64; D]) -> f64 {
        let r = (0..D).map(|c| (x[c] - self.center[c]).powi(2)).sum::<f64>().sqrt();
        let s = self.s_bulk;
        let radial = s / ((s + r) * (s + r));
        if D == 3 {
            radial / (4.0 * PI * r * r)
        } else {
            radial / (2.0 * PI * r)
        }
    }
}

fn random_direction<const D: usize>(rng: &mut ChaCha8Rng) -> [f64; D] {
    loop {
        let v: [f64; D] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = dot(&v, &v).sqrt();
        if n > 0.0 {
            return v.map(|c| c / n);
        }
    }
}

#[inline]
fn inv4(s: f64) -> f64 {
    let t = s * s;
    1.0 / (t * t)
}

/// `s` at which the lowest loop point (`m = min n.y < 0`) touches the plate.
#[inline]
fn plate_s(g: &BallPlate, x_z: f64, m: f64) -> f64 {
    let dz = g.radius + g.gap + x_z;
    if dz <= 0.0 {
        0.0
    } else if m >= 0.0 {
        f64::INFINITY
    } else {
        dz / -m
    }
}

fn union_integral(ivs: &[(f64, f64)]) -> f64 {
    ivs.iter().map(|&(lo, hi)| 0.5 * (inv4(lo) - inv4(hi))).sum()
}

/// Per-loop energy density at loop-frame position `x` with plate bound `sp`.
fn density_at<const D: usize>(
    g: &BallPlate,
    method: Method,
    tree: &LoopTree<D>,
    x: &[f64; D],
    sp: f64,
    buf: &mut Vec<(f64, f64)>,
) -> f64 {
    if sp == f64::INFINITY {
        return 0.0;
    }
    let inside = dot(x, x) <= g.radius * g.radius;
    match method {
        Method::SmallDistance => match tree.first_entry(x, g.radius, sp) {
            Some(lb) if lb > 0.0 => -0.5 * DENSITY_PREFACTOR * inv4(lb),
            _ => 0.0,
        },
        _ if inside => match tree.last_exit(x, g.radius) {
            Some(smax) if smax > sp => 0.5 * DENSITY_PREFACTOR * (inv4(smax) - inv4(sp)),
            _ => 0.0,
        },
        _ => {
            tree.union(x, g.radius, sp, buf);
            -DENSITY_PREFACTOR * union_integral(buf)
        }
    }
}

/// Importance-sampled energy of one loop for one geometry.
fn loop_energy<const D: usize>(
    g: &BallPlate,
    method: Method,
    spec: &QuadratureSpec,
    tree: &LoopTree<D>,
    frames: &[Frame<D>],
    normal_min: &[f64],
    rng: &mut ChaCha8Rng,
    buf: &mut Vec<(f64, f64)>,
) -> f64 {
    let mut per_orientation = Vec::with_capacity(frames.len());
    match method {
        Method::Full | Method::SmallDistance => {
            let proposal = Proposal::<D>::new(g, spec);
            for (frame, &m) in frames.iter().zip(normal_min) {
                let mut acc = 0.0;
                for _ in 0..spec.samples {
                    let (x, q) = proposal.sample(rng);
                    let f = density_at(g, method, tree, &to_loop_frame(frame, &x), plate_s(g, x[D - 1], m), buf);
                    if f != 0.0 {
                        acc += f / q;
                    }
                }
                per_orientation.push(acc / spec.samples as f64);
            }
        }
        Method::Rotated => {
            for (frame, &m) in frames.iter().zip(normal_min) {
                per_orientation.push(rotated_orientation(g, spec, tree, frame, m, rng, buf));
            }
        }
    }
    stats::pairwise_mean(&per_orientation)
}

/// Rotated form for one orientation: exterior radii with several angles per
/// radius sharing one ball union, plus uniform samples inside the ball.
fn rotated_orientation<const D: usize>(
    g: &BallPlate,
    spec: &QuadratureSpec,
    tree: &LoopTree<D>,
    frame: &Frame<D>,
    normal_min: f64,
    rng: &mut ChaCha8Rng,
    buf: &mut Vec<(f64, f64)>,
) -> f64 {
    let d = frame[D - 1];
    let e = frame[0];
    let scale = g.gap;
    let mut exterior = 0.0;
    for _ in 0..spec.samples {
        let u: f64 = rng.random();
        let excess = scale * u / (1.0 - u);
        let r = g.radius + excess;
        let pdf_r = scale / ((scale + excess) * (scale + excess));
        let x: [f64; D] = d.map(|c| r * c);
        tree.union(&x, g.radius, 0.0, buf);
        if buf.is_empty() {
            continue;
        }
        let angular = if D == 3 { 4.0 * PI * r * r } else { 2.0 * PI * r };
        for j in 0..spec.angles {
            // stratified in cos(theta) (3-d) or theta (2-d)
            let v = (j as f64 + rng.random::<f64>()) / spec.angles as f64;
            let (sin, cos) = if D == 3 {
                let c = 2.0 * v - 1.0;
                ((1.0 - c * c).max(0.0).sqrt(), c)
            } else {
                (2.0 * PI * v).sin_cos()
            };
            let n: [f64; D] = std::array::from_fn(|k| cos * d[k] + sin * e[k]);
            let sp = plate_s(g, r * cos, tree.min_dot(&n));
            if sp == f64::INFINITY {
                continue;
            }
            let start = buf.partition_point(|iv| iv.1 < sp);
            let mut total = 0.0;
            for (k, &(lo, hi)) in buf[start..].iter().enumerate() {
                let lo = if k == 0 { lo.max(sp) } else { lo };
                total += 0.5 * (inv4(lo) - inv4(hi));
            }
            exterior += -DENSITY_PREFACTOR * total * angular / pdf_r;
        }
    }
    let mut value = exterior / (spec.samples * spec.angles) as f64;

    if spec.interior_samples > 0 {
        let volume = if D == 3 { 4.0 / 3.0 * PI * g.radius.powi(3) } else { PI * g.radius * g.radius };
        let mut interior = 0.0;
        for _ in 0..spec.interior_samples {
            let u: f64 = rng.random();
            let r = g.radius * if D == 3 { u.cbrt() } else { u.sqrt() };
            let dir = random_direction::<D>(rng);
            let x: [f64; D] = dir.map(|c| r * c);
            let sp = plate_s(g, x[D - 1], normal_min);
            interior += density_at(g, Method::Full, tree, &to_loop_frame(frame, &x), sp, buf) * volume;
        }
        value += interior / spec.interior_samples as f64;
    }
    value
}

/// Per-loop energies for several geometries over the same loops.
pub(crate) fn run<const D: usize, S: LoopSource>(
    geoms: &[BallPlate],
    source: &S,
    spec: &QuadratureSpec,
) -> Result<Vec<EngineOutput>> {
    spec.validate()?;
    if source.dim() != D {
        return Err(Error::DimensionMismatch { expected: D, found: source.dim() });
    }
    let n_points = source.n_points();
    let use_cv = spec.control_variates && n_points >= 8;
    let methods: Vec<Method> = geoms.iter().map(|g| spec.method_for(g.gap / g.radius)).collect();
    let seed = source.seed() ^ SAMPLING_TAG;
    let var_scale = mean_point_variance(n_points);
    let means = feature_means(n_points);

    let per_loop: Vec<(Vec<f64>, [f64; N_FEATURES])> = (0..source.n_loops())
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(scratch, buf), l| {
                let tree = LoopTree::<D>::new(source.loop_points(l, scratch));
                let mut orient_rng = ChaCha8Rng::seed_from_u64(seed);
                orient_rng.set_stream(2 * l as u64);
                let frames: Vec<Frame<D>> = (0..spec.orientations).map(|_| random_frame(&mut orient_rng)).collect();
                let normal_min: Vec<f64> = frames.iter().map(|f| tree.min_dot(&f[D - 1])).collect();
                let mut feats = [0.0; N_FEATURES];
                if use_cv {
                    let modes = Modes::new(tree.points());
                    let cov = second_moments(tree.points());
                    for f in &frames {
                        let n = &f[D - 1];
                        let g: f64 = (0..D).map(|i| n[i] * dot(&cov[i], n)).sum::<f64>() / var_scale;
                        let fe = features(g, modes.powers(n));
                        for (acc, v) in feats.iter_mut().zip(fe) {
                            *acc += v / frames.len() as f64;
                        }
                    }
                }
                let energies = geoms
                    .iter()
                    .zip(&methods)
                    .map(|(g, &method)| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(2 * l as u64 + 1);
                        loop_energy(g, method, spec, &tree, &frames, &normal_min, &mut rng, buf)
                    })
                    .collect();
                (energies, feats)
            },
        )
        .collect();

    let feats: Vec<[f64; N_FEATURES]> = per_loop.iter().map(|(_, f)| *f).collect();
    geoms
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let y: Vec<f64> = per_loop.iter().map(|(e, _)| e[i]).collect();
            let energy = if use_cv {
                cv_jackknife(&y, &feats, &means, spec.blocks)?
            } else {
                stats::blocked_mean(&y, spec.blocks)?
            };
            let mut warnings = Vec::new();
            let ratio = g.gap / g.radius;
            let needed = 100.0 * 12.0 * ratio * ratio;
            if (n_points as f64) < needed {
                warnings.push(format!(
                    "N = {n_points} is below 100 * 12 (a/R)^2 = {needed:.0}; the loops may not resolve the ball"
                ));
            }
            if energy.value != 0.0 && energy.error / energy.value.abs() > spec.target_rel_error {
                warnings.push(format!(
                    "relative error {:.3e} exceeds the target {:.3e}",
                    energy.error / energy.value.abs(),
                    spec.target_rel_error
                ));
            }
            Ok(EngineOutput {
                energy,
                method: methods[i],
                warnings,
            })
        })
        .collect()
}

/// Jackknife of the control-variate estimator `mean(Y) - beta . (mean(F) - mu)`
/// with `beta` refit on every leave-one-block-out sample.
fn cv_jackknife(
    y: &[f64],
    feats: &[[f64; N_FEATURES]],
    means: &[f64; N_FEATURES],
    n_blocks: usize,
) -> Result<JackknifeEstimate> {
    const P: usize = N_FEATURES;
    let ranges = stats::block_ranges(y.len(), n_blocks);
    if ranges.len() < 2 {
        return Err(Error::TooFewBlocks(ranges.len()));
    }
    // sufficient statistics per block: [Y, F_i, F_i F_j, F_i Y]
    let width = 1 + P + P * P + P;
    let block_sums: Vec<Vec<f64>> = ranges
        .iter()
        .map(|r| {
            (0..width)
                .map(|c| {
                    let col: Vec<f64> = r
                        .clone()
                        .map(|l| {
                            let (yl, f) = (y[l], &feats[l]);
                            if c == 0 {
                                yl
                            } else if c <= P {
                                f[c - 1]
                            } else if c <= P + P * P {
                                let k = c - 1 - P;
                                f[k / P] * f[k % P]
                            } else {
                                f[c - 1 - P - P * P] * yl
                            }
                        })
                        .collect();
                    stats::pairwise_sum(&col)
                })
                .collect()
        })
        .collect();
    let totals: Vec<f64> = (0..width)
        .map(|c| stats::pairwise_sum(&block_sums.iter().map(|b| b[c]).collect::<Vec<_>>()))
        .collect();

    let estimate = |sums: &[f64], n: f64| -> Option<f64> {
        let ybar = sums[0] / n;
        let fbar: Vec<f64> = (0..P).map(|i| sums[1 + i] / n).collect();
        let cov = DMatrix::from_fn(P, P, |i, j| sums[1 + P + i * P + j] / n - fbar[i] * fbar[j]);
        let cfy = DVector::from_fn(P, |i, _| sums[1 + P + P * P + i] / n - fbar[i] * ybar);
        let beta = cov.cholesky()?.solve(&cfy);
        let shift: f64 = (0..P).map(|i| beta[i] * (fbar[i] - means[i])).sum();
        Some(ybar - shift)
    };

    let replicates: Option<Vec<f64>> = ranges
        .iter()
        .zip(&block_sums)
        .map(|(r, b)| {
            let sums: Vec<f64> = totals.iter().zip(b).map(|(t, v)| t - v).collect();
            estimate(&sums, (y.len() - r.len()) as f64)
        })
        .collect();
    match replicates {
        Some(reps) if reps.iter().all(|v| v.is_finite()) => stats::from_replicates(&reps),
        _ => stats::blocked_mean(y, n_blocks),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::generate_ensemble;

    #[test]
    fn mode_powers_have_unit_mean() {
        let e = generate_ensemble(4000, 64, 3, 5).unwrap();
        let mut sums = [0.0; 3];
        let mut sq = [0.0; 3];
        for lp in e.iter_loops() {
            let pts: Vec<[f64; 3]> = lp.chunks(3).map(|p| [p[0], p[1], p[2]]).collect();
            let p = Modes::new(&pts).powers(&[0.0, 0.6, 0.8]);
            for m in 0..3 {
                sums[m] += p[m];
                sq[m] += p[m] * p[m];
            }
        }
        for m in 0..3 {
            let mean = sums[m] / 4000.0;
            let second = sq[m] / 4000.0;
            assert!((mean - 1.0).abs() < 0.06, "mode {m}: mean {mean}");
            assert!((second - 2.0).abs() < 0.3, "mode {m}: second moment {second}");
        }
    }

    #[test]
    fn modes_match_direct_dft() {
        let e = generate_ensemble(1, 3000, 2, 8).unwrap();
        let pts: Vec<[f64; 2]> = e.points().chunks(2).map(|p| [p[0], p[1]]).collect();
        let modes = Modes::new(&pts);
        let n = pts.len() as f64;
        for m in 0..3 {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, p) in pts.iter().enumerate() {
                let ph = -2.0 * PI * ((m + 1) * k) as f64 / n;
                re += p[1] * ph.cos();
                im += p[1] * ph.sin();
            }
            assert!((modes.re[m][1] - re / n).abs() < 1e-13);
            assert!((modes.im[m][1] - im / n).abs() < 1e-13);
        }
    }

    #[test]
    fn variance_feature_moments_match_simulation() {
        for n in [7usize, 8, 64] {
            let means = feature_means(n);
            let e = generate_ensemble(40_000, n, 1, 21).unwrap();
            let mut acc = [0.0; 3];
            for lp in e.iter_loops() {
                let g = lp.iter().map(|v| v * v).sum::<f64>() / n as f64 / mean_point_variance(n);
                acc[0] += g;
                acc[1] += g * g;
                acc[2] += g * g * g;
            }
            for j in 0..3 {
                let m = acc[j] / 40_000.0;
                assert!((m / means[j] - 1.0).abs() < 0.02 * (j + 1) as f64, "N={n} moment {}: {m} vs {}", j + 1, means[j]);
            }
        }
    }

    #[test]
    fn frames_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f: Frame<3> = random_frame(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    let d = dot(&f[i], &f[j]);
                    assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn proposal_density_is_normalized() {
        // E_q[1_B / q] = |B| for a box B inside the support
        let g = BallPlate::new(1.0, 0.3).unwrap();
        let spec = QuadratureSpec::default();
        let prop = Proposal::<3>::new(&g, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let (x, q) = prop.sample(&mut rng);
            if x.iter().all(|v| v.abs() < 1.0) {
                acc += 1.0 / q;
            }
        }
        let vol = acc / n as f64;
        assert!((vol - 8.0).abs() < 0.2, "estimated volume {vol}");

        let prop = Proposal::<2>::new(&g, &spec);
        let mut acc = 0.0;
        for _ in 0..n {
            let (x, q) = prop.sample(&mut rng);
            if x.iter().all(|v| v.abs() < 1.0) {
                acc += 1.0 / q;
            }
        }
        let area = acc / n as f64;
        assert!((area - 4.0).abs() < 0.08, "estimated area {area}");
    }

    #[test]
    fn cv_estimator_is_exact_for_linear_data() {
        // Y = 3 + 2 (P1 - 1): the control variate removes all noise
        let e = generate_ensemble(500, 32, 1, 3).unwrap();
        let feats: Vec<[f64; N_FEATURES]> = e
            .iter_loops()
            .map(|lp| {
                let pts: Vec<[f64; 1]> = lp.iter().map(|v| [*v]).collect();
                let g = second_moments(&pts)[0][0] / mean_point_variance(32);
                features(g, Modes::new(&pts).powers(&[1.0]))
            })
            .collect();
        let y: Vec<f64> = feats.iter().map(|f| 3.0 + 2.0 * (f[3] - 1.0) - 0.5 * (f[1] - 1.0)).collect();
        let means = feature_means(32);
        let y: Vec<f64> = y.iter().map(|v| v + 0.5 * (means[1] - 1.0)).collect();
        let est = cv_jackknife(&y, &feats, &means, 20).unwrap();
        assert!((est.value - 3.0).abs() < 1e-9);
        assert!(est.error < 1e-9);
    }
}
