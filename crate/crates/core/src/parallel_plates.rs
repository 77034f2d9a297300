//! Parallel plates in `D` spacetime dimensions via the loop extent.
//!
//! A loop spans two plates at distance `a` iff `sqrt(T) L > a`, where `L` is
//! its extent along the plate normal, so the propertime integral collapses
//! to a moment of the extent distribution:
//! `E = -(A / a^{D-1}) <L^D> / (D (D-1) (4 pi)^{D/2})`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::loops::{ExtentStats, LoopSource};
use crate::stats::{JackknifeEstimate, DEFAULT_BLOCKS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelPlatesConfig {
    pub a: f64,
    pub area: f64,
    /// Spacetime dimension.
    #[serde(rename = "D")]
    pub dim: f64,
}

impl ParallelPlatesConfig {
    pub fn new(a: f64, area: f64, dim: f64) -> Result<Self> {
        if !(a > 0.0) || !(area > 0.0) {
            return Err(Error::InvalidParameter(format!("need a > 0 and A > 0, got a = {a}, A = {area}")));
        }
        if !(dim > 1.0 && dim.is_finite()) {
            return Err(Error::InvalidParameter(format!("need D > 1, got {dim}")));
        }
        Ok(Self { a, area, dim })
    }
}

/// `(s - 1) zeta(s)` for real `s > 0`, finite and equal to 1 at `s = 1`.
///
/// Euler-Maclaurin with ten explicit terms and six Bernoulli corrections.
pub fn zeta_times_s_minus_1(s: f64) -> f64 {
    const M: usize = 10;
    const BERNOULLI: [f64; 6] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0];
    let m = M as f64;
    let head: f64 = (1..M).map(|n| (n as f64).powf(-s)).sum();
    let mut tail = 0.5 * m.powf(-s);
    let mut rising = s; // s (s+1) ... (s+2k-2)
    let mut factorial = 2.0; // (2k)!
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = k + 1;
        tail += b / factorial * rising * m.powf(-s - 2.0 * k as f64 + 1.0);
        rising *= (s + 2.0 * k as f64 - 1.0) * (s + 2.0 * k as f64);
        factorial *= (2 * k + 1) as f64 * (2 * k + 2) as f64;
    }
    (s - 1.0) * (head + tail) + m.powf(1.0 - s)
}

/// Riemann zeta for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    zeta_times_s_minus_1(s) / (s - 1.0)
}

/// Continuum value `<L^D> = D (D-1) Gamma(D/2) zeta(D)`; `sqrt(pi)` at `D = 1`.
pub fn moment_identity(dim: f64) -> f64 {
    dim * gamma(dim / 2.0) * zeta_times_s_minus_1(dim)
}

fn require_1d<S: LoopSource>(source: &S) -> Result<()> {
    if source.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: source.dim() });
    }
    Ok(())
}

/// Monte Carlo `<L^D>` over a 1-d ensemble, any real `D >= 0`.
pub fn polymer_moment<S: LoopSource>(source: &S, dim: f64) -> Result<JackknifeEstimate> {
    require_1d(source)?;
    if !(dim >= 0.0) {
        return Err(Error::InvalidParameter(format!("moment order must be nonnegative, got {dim}")));
    }
    ExtentStats::compute(source).moment(dim, DEFAULT_BLOCKS)
}

/// `-(A / a^{D-1}) Gamma(D/2) zeta(D) / (4 pi)^{D/2}`.
pub fn analytic_pp_energy(cfg: &ParallelPlatesConfig) -> f64 {
    let d = cfg.dim;
    -cfg.area / cfg.a.powf(d - 1.0) * gamma(d / 2.0) * zeta(d) / (4.0 * PI).powf(d / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatesEnergy {
    #[serde(rename = "D")]
    pub dim: f64,
    pub a: f64,
    #[serde(rename = "A")]
    pub area: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E_err")]
    pub energy_err: f64,
    #[serde(rename = "E_analytic")]
    pub analytic: f64,
    pub moment: JackknifeEstimate,
    #[serde(rename = "nL")]
    pub n_loops: usize,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub seed: u64,
}

/// Energy from the extent moment of the same ensemble; integer `D >= 2`.
pub fn energy_from_extents<S: LoopSource>(cfg: &ParallelPlatesConfig, source: &S) -> Result<PlatesEnergy> {
    require_1d(source)?;
    check_energy_dim(cfg.dim)?;
    let stats = ExtentStats::compute(source);
    energy_from_extent_stats(cfg, &stats, source.n_points(), source.seed())
}

fn check_energy_dim(d: f64) -> Result<()> {
    if d < 2.0 || d.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!("energy needs an integer D >= 2, got {d}")));
    }
    Ok(())
}

/// Energy from precomputed extents of `N`-point 1-d loops.
pub fn energy_from_extent_stats(
    cfg: &ParallelPlatesConfig,
    stats: &ExtentStats,
    n_points: usize,
    seed: u64,
) -> Result<PlatesEnergy> {
    let d = cfg.dim;
    check_energy_dim(d)?;
    let moment = stats.moment(d, DEFAULT_BLOCKS)?;
    let factor = -cfg.area / cfg.a.powf(d - 1.0) / (d * (d - 1.0) * (4.0 * PI).powf(d / 2.0));
    let e = moment.scaled(factor);
    Ok(PlatesEnergy {
        dim: d,
        a: cfg.a,
        area: cfg.area,
        energy: e.value,
        energy_err: e.error,
        analytic: analytic_pp_energy(cfg),
        moment,
        n_loops: stats.extents.len(),
        n_points,
        seed,
    })
}
