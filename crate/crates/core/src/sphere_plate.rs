//! Sphere of radius `R` centered at the origin above the plate `z = -(R + a)`.

use serde::{Deserialize, Serialize};

use crate::engine::{self, Method, QuadratureSpec};
use crate::error::{Error, Result};
use crate::geometry::{self, BallPlate, DensitySample};
use crate::loops::{self, LoopSource};
use crate::pfa::{self, Geometry};
use crate::support::{Interval, IntervalSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePlateConfig {
    pub radius: f64,
    pub gap: f64,
    /// Degrees-of-freedom factor multiplying the single-scalar result.
    pub c_pp: f64,
}

impl SpherePlateConfig {
    pub fn new(radius: f64, gap: f64) -> Result<Self> {
        BallPlate::new(radius, gap)?;
        Ok(Self { radius, gap, c_pp: 1.0 })
    }

    pub fn with_c_pp(mut self, c_pp: f64) -> Result<Self> {
        if !(c_pp > 0.0) {
            return Err(Error::InvalidParameter(format!("c_pp must be positive, got {c_pp}")));
        }
        self.c_pp = c_pp;
        Ok(self)
    }

    pub(crate) fn ball(&self) -> BallPlate {
        BallPlate { radius: self.radius, gap: self.gap }
    }

    pub fn ratio(&self) -> f64 {
        self.gap / self.radius
    }
}

fn require_3d<S: LoopSource>(source: &S) -> Result<()> {
    if source.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: source.dim() });
    }
    Ok(())
}

/// Propertime at which the loop first touches the plate (see [`BallPlate::t_min_plate`]).
pub fn t_min_plate(cfg: &SpherePlateConfig, x_cm: &[f64; 3], points: &[f64]) -> f64 {
    cfg.ball().t_min_plate(x_cm[2], loops::min_z(points, 3))
}

pub fn t_max_sphere_inside(cfg: &SpherePlateConfig, x_cm: &[f64; 3], points: &[f64]) -> Result<f64> {
    cfg.ball().t_max_inside(x_cm, points)
}

pub fn filter_relevant_points(cfg: &SpherePlateConfig, x_cm: &[f64; 3], points: &[f64]) -> Vec<usize> {
    cfg.ball().filter_relevant_points(x_cm, points)
}

pub fn t_pm_roots(cfg: &SpherePlateConfig, x_cm: &[f64; 3], y: &[f64; 3]) -> Option<Interval> {
    cfg.ball().t_pm_roots(x_cm, y)
}

pub fn loop_support_outside(cfg: &SpherePlateConfig, x_cm: &[f64; 3], points: &[f64]) -> IntervalSet {
    cfg.ball().loop_support_outside(x_cm, points)
}

/// `ε = (1/64π²) ⟨(1/T_max² − 1/T_min²) θ(T_max − T_min)⟩` for `|x| ≤ R`.
pub fn density_inside<S: LoopSource>(cfg: &SpherePlateConfig, x_cm: &[f64; 3], source: &S) -> Result<DensitySample> {
    require_3d(source)?;
    if x_cm.iter().map(|v| v * v).sum::<f64>() > cfg.radius * cfg.radius {
        return Err(Error::InvalidParameter("center of mass outside the sphere".into()));
    }
    density(cfg, x_cm, source)
}

/// `ε = −(1/32π²) ⟨∫_S dT/T³⟩` for `|x| > R`.
pub fn density_outside<S: LoopSource>(cfg: &SpherePlateConfig, x_cm: &[f64; 3], source: &S) -> Result<DensitySample> {
    require_3d(source)?;
    if x_cm.iter().map(|v| v * v).sum::<f64>() <= cfg.radius * cfg.radius {
        return Err(Error::InvalidParameter("center of mass inside the sphere".into()));
    }
    density(cfg, x_cm, source)
}

/// Energy density at any center of mass.
pub fn density<S: LoopSource>(cfg: &SpherePlateConfig, x_cm: &[f64; 3], source: &S) -> Result<DensitySample> {
    require_3d(source)?;
    let ball = cfg.ball();
    let res = geometry::ensemble_mean(source, |pts| Ok(cfg.c_pp * ball.loop_density(x_cm, pts)?))?;
    Ok(geometry::sample_at(x_cm, res))
}

/// Densities at `|x| = r` for angles in `[0, π]` from the `+z` axis.
pub fn density_outside_rotated<S: LoopSource>(
    cfg: &SpherePlateConfig,
    r: f64,
    angles: &[f64],
    source: &S,
    n_theta: usize,
    envelope: bool,
) -> Result<Vec<DensitySample>> {
    require_3d(source)?;
    let mut out = geometry::density_outside_rotated(&cfg.ball(), r, angles, source, n_theta, envelope)?;
    for s in &mut out {
        s.eps *= cfg.c_pp;
        s.eps_err *= cfg.c_pp;
    }
    Ok(out)
}

/// `ε ≈ −(1/64π²) ⟨1/(min S)²⟩`, accurate to about `(1 + 4R/a)^{-4}`.
pub fn density_small_distance<S: LoopSource>(
    cfg: &SpherePlateConfig,
    x_cm: &[f64; 3],
    source: &S,
) -> Result<DensitySample> {
    require_3d(source)?;
    let ball = cfg.ball();
    let res = geometry::ensemble_mean(source, |pts| Ok(cfg.c_pp * ball.loop_density_small_distance(x_cm, pts)?))?;
    Ok(geometry::sample_at(x_cm, res))
}

/// Documented relative error bound of the small-distance form.
pub fn small_distance_error_bound(ratio: f64) -> f64 {
    (1.0 + 4.0 / ratio).powi(-4)
}

/// Interaction energy with jackknife error and PFA normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub geometry: Geometry,
    #[serde(rename = "R")]
    pub radius: f64,
    pub a: f64,
    pub cpp: f64,
    /// Energy (sphere) or energy per unit length (cylinder).
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E_err")]
    pub energy_err: f64,
    #[serde(rename = "E_pfa0")]
    pub pfa_zeroth: f64,
    #[serde(rename = "E_normalized")]
    pub normalized: f64,
    #[serde(rename = "E_normalized_err")]
    pub normalized_err: f64,
    #[serde(rename = "nL")]
    pub n_loops: usize,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub seed: u64,
    pub method: Method,
    pub blocks: usize,
    pub quadrature: QuadratureSpec,
    pub warnings: Vec<String>,
}

pub(crate) fn assemble<S: LoopSource>(
    geometry: Geometry,
    ball: &BallPlate,
    c_pp: f64,
    out: engine::EngineOutput,
    source: &S,
    spec: &QuadratureSpec,
) -> EnergyResult {
    let e = out.energy.scaled(c_pp);
    let pfa0 = pfa::pfa_zeroth(geometry, ball.radius, ball.gap, c_pp);
    EnergyResult {
        geometry,
        radius: ball.radius,
        a: ball.gap,
        cpp: c_pp,
        energy: e.value,
        energy_err: e.error,
        pfa_zeroth: pfa0,
        normalized: e.value / pfa0,
        normalized_err: e.error / pfa0.abs(),
        n_loops: source.n_loops(),
        n_points: source.n_points(),
        seed: source.seed(),
        method: out.method,
        blocks: e.blocks,
        quadrature: spec.clone(),
        warnings: out.warnings,
    }
}

pub fn interaction_energy<S: LoopSource>(
    cfg: &SpherePlateConfig,
    source: &S,
    spec: &QuadratureSpec,
) -> Result<EnergyResult> {
    Ok(interaction_energies(std::slice::from_ref(cfg), source, spec)?.remove(0))
}

/// Energies of several configurations evaluated on the same loops with
/// common random numbers (correlated, so differences are sharp).
pub fn interaction_energies<S: LoopSource>(
    cfgs: &[SpherePlateConfig],
    source: &S,
    spec: &QuadratureSpec,
) -> Result<Vec<EnergyResult>> {
    require_3d(source)?;
    let balls: Vec<BallPlate> = cfgs.iter().map(|c| c.ball()).collect();
    let outs = engine::run::<3, S>(&balls, source, spec)?;
    Ok(cfgs
        .iter()
        .zip(&balls)
        .zip(outs)
        .map(|((c, b), o)| assemble(Geometry::SpherePlate, b, c.c_pp, o, source, spec))
        .collect())
}
