//! Infinite cylinder of radius `R` along `y` above the plate `z = -(R + a)`.
//!
//! Translation invariance along the axis leaves a two-dimensional problem in
//! `(x, z)`: 2-d loops against a circle, with energies per unit length.

use serde::{Deserialize, Serialize};

use crate::engine::{self, QuadratureSpec};
use crate::error::{Error, Result};
use crate::geometry::{self, BallPlate, DensitySample};
use crate::loops::LoopSource;
use crate::pfa::Geometry;
use crate::sphere_plate::{assemble, EnergyResult};
use crate::support::IntervalSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderPlateConfig {
    pub radius: f64,
    pub gap: f64,
    pub c_pp: f64,
}

impl CylinderPlateConfig {
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

fn require_2d<S: LoopSource>(source: &S) -> Result<()> {
    if source.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: source.dim() });
    }
    Ok(())
}

/// Support of one 2-d loop at an outside center of mass `(x, z)`.
pub fn loop_support_2d(cfg: &CylinderPlateConfig, x_cm: &[f64; 2], points: &[f64]) -> IntervalSet {
    cfg.ball().loop_support_outside(x_cm, points)
}

/// Energy density per unit length at `(x, z)`, inside or outside the circle.
pub fn density_2d<S: LoopSource>(cfg: &CylinderPlateConfig, x_cm: &[f64; 2], source: &S) -> Result<DensitySample> {
    require_2d(source)?;
    let ball = cfg.ball();
    let res = geometry::ensemble_mean(source, |pts| Ok(cfg.c_pp * ball.loop_density(x_cm, pts)?))?;
    Ok(geometry::sample_at(x_cm, res))
}

pub fn density_2d_small_distance<S: LoopSource>(
    cfg: &CylinderPlateConfig,
    x_cm: &[f64; 2],
    source: &S,
) -> Result<DensitySample> {
    require_2d(source)?;
    let ball = cfg.ball();
    let res = geometry::ensemble_mean(source, |pts| Ok(cfg.c_pp * ball.loop_density_small_distance(x_cm, pts)?))?;
    Ok(geometry::sample_at(x_cm, res))
}

pub fn energy_per_length<S: LoopSource>(
    cfg: &CylinderPlateConfig,
    source: &S,
    spec: &QuadratureSpec,
) -> Result<EnergyResult> {
    Ok(energies_per_length(std::slice::from_ref(cfg), source, spec)?.remove(0))
}

/// Several configurations on shared loops with common random numbers.
pub fn energies_per_length<S: LoopSource>(
    cfgs: &[CylinderPlateConfig],
    source: &S,
    spec: &QuadratureSpec,
) -> Result<Vec<EnergyResult>> {
    require_2d(source)?;
    let balls: Vec<BallPlate> = cfgs.iter().map(|c| c.ball()).collect();
    let outs = engine::run::<2, S>(&balls, source, spec)?;
    Ok(cfgs
        .iter()
        .zip(&balls)
        .zip(outs)
        .map(|((c, b), o)| assemble(Geometry::CylinderPlate, b, c.c_pp, o, source, spec))
        .collect())
}
