//! Proximity force approximation normalizers and bands, reference fits of
//! the normalized energy, and PFA validity bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    SpherePlate,
    CylinderPlate,
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Geometry::SpherePlate => "sphere-plate",
            Geometry::CylinderPlate => "cylinder-plate",
        })
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" | "sphere-plate" => Ok(Geometry::SpherePlate),
            "cylinder" | "cylinder-plate" => Ok(Geometry::CylinderPlate),
            other => Err(Error::InvalidParameter(format!("unknown geometry {other:?}"))),
        }
    }
}

/// Zeroth-order PFA energy; per unit length for the cylinder.
pub fn pfa_zeroth(geometry: Geometry, radius: f64, gap: f64, c_pp: f64) -> f64 {
    match geometry {
        Geometry::SpherePlate => -c_pp * PI.powi(3) / 1440.0 * radius / (gap * gap),
        Geometry::CylinderPlate => {
            -c_pp * PI.powi(3) / (1920.0 * 2f64.sqrt()) * radius.sqrt() / gap.powf(2.5)
        }
    }
}

/// Normalized first-order PFA band `[1 - 3a/R, 1 - a/R]`: sphere-based lower
/// edge, plate-based upper edge.
pub fn pfa_band_sphere(radius: f64, gap: f64) -> (f64, f64) {
    let x = gap / radius;
    (1.0 - 3.0 * x, 1.0 - x)
}

/// `p(x) = 1 + c1 x + c2 x^2` with half-width `w x sqrt(1 + b1 x + b2 x^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub c1: f64,
    pub c2: f64,
    pub width: f64,
    pub b1: f64,
    pub b2: f64,
}

impl PolynomialFit {
    pub fn central(&self, x: f64) -> f64 {
        1.0 + self.c1 * x + self.c2 * x * x
    }

    pub fn half_width(&self, x: f64) -> f64 {
        self.width * x * (1.0 + self.b1 * x + self.b2 * x * x).sqrt()
    }
}

/// Estimate with a symmetric uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFits {
    pub sphere: PolynomialFit,
    pub cylinder: PolynomialFit,
    /// Constrained linear fits `1 + c x`.
    pub sphere_linear: Coefficient,
    pub cylinder_linear: Coefficient,
    /// Large-distance limit of the normalized sphere-plate energy.
    pub sphere_asymptote: f64,
    /// Validity bounds of the sphere PFA at 0.1% and 1% accuracy.
    pub bound_permille: f64,
    pub bound_percent: f64,
    /// Range of linear coefficients spanned by PFA variants for the cylinder.
    pub cylinder_pfa_linear_range: (f64, f64),
}

pub const REFERENCE_FITS: ReferenceFits = ReferenceFits {
    sphere: PolynomialFit { c1: 0.35, c2: -1.92, width: 0.19, b1: -137.2, b2: 5125.0 },
    cylinder: PolynomialFit { c1: 0.21, c2: -0.66, width: 0.097, b1: -68.60, b2: 1282.0 },
    sphere_linear: Coefficient { value: 0.33, error: 0.06 },
    cylinder_linear: Coefficient { value: 0.195, error: 0.028 },
    sphere_asymptote: 180.0 / (PI * PI * PI * PI),
    bound_permille: 0.00073,
    bound_percent: 0.00755,
    cylinder_pfa_linear_range: (-0.92, -0.25),
};

impl ReferenceFits {
    pub fn fit(&self, geometry: Geometry) -> &PolynomialFit {
        match geometry {
            Geometry::SpherePlate => &self.sphere,
            Geometry::CylinderPlate => &self.cylinder,
        }
    }
}

/// Reference fit at `x = a/R`: `(central, half_width)`. Valid for `0 <= x < 0.1`.
pub fn fit_curve(geometry: Geometry, x: f64) -> Result<(f64, f64)> {
    if !(0.0..0.1).contains(&x) {
        return Err(Error::FitRange(x));
    }
    let fit = REFERENCE_FITS.fit(geometry);
    Ok((fit.central(x), fit.half_width(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityBound {
    pub x_bound: f64,
    /// The bands are already disjoint at the lower scan edge.
    pub at_lower_edge: bool,
}

fn overlap((a_lo, a_hi): (f64, f64), (b_lo, b_hi): (f64, f64)) -> bool {
    a_lo <= b_hi && b_lo <= a_hi
}

/// Largest `x` in `range` where the worldline band, widened by the relative
/// `extra_tolerance`, still intersects the PFA band. The range is scanned on
/// `scan_points` nodes and the first separation refined by bisection.
pub fn validity_bound<W, P>(
    worldline_band: W,
    pfa_band: P,
    extra_tolerance: f64,
    range: (f64, f64),
    scan_points: usize,
) -> Result<ValidityBound>
where
    W: Fn(f64) -> (f64, f64),
    P: Fn(f64) -> (f64, f64),
{
    let (lo, hi) = range;
    if !(lo < hi) || scan_points < 2 || !(extra_tolerance >= 0.0) {
        return Err(Error::InvalidParameter("bad validity-bound scan settings".into()));
    }
    let widened = |x: f64| {
        let (a, b) = worldline_band(x);
        (a - extra_tolerance * a.abs(), b + extra_tolerance * b.abs())
    };
    let meets = |x: f64| overlap(widened(x), pfa_band(x));
    if !meets(lo) {
        return Ok(ValidityBound { x_bound: lo, at_lower_edge: true });
    }
    let node = |i: usize| lo + (hi - lo) * i as f64 / (scan_points - 1) as f64;
    let first_gap = (1..scan_points)
        .find(|&i| !meets(node(i)))
        .ok_or(Error::NoBoundInRange { lo, hi })?;
    let (mut a, mut b) = (node(first_gap - 1), node(first_gap));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if meets(m) {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(ValidityBound { x_bound: a, at_lower_edge: false })
}

/// Sphere PFA validity bound from the reference fit with a relative
/// statistical width `stat_width` (e.g. 0.001) widened by `extra_tolerance`.
pub fn sphere_validity_bound(stat_width: f64, extra_tolerance: f64) -> Result<ValidityBound> {
    let fit = REFERENCE_FITS.sphere;
    validity_bound(
        |x| {
            let p = fit.central(x);
            (p * (1.0 - stat_width), p * (1.0 + stat_width))
        },
        |x| pfa_band_sphere(1.0, x),
        extra_tolerance,
        (0.0, 0.1),
        2001,
    )
}
