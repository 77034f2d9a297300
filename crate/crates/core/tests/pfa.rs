use proptest::prelude::*;

use wlcasimir::pfa::*;
use wlcasimir::Error;

#[test]
fn zeroth_order_examples() {
    let s = pfa_zeroth(Geometry::SpherePlate, 1.0, 1.0, 1.0);
    let c = pfa_zeroth(Geometry::CylinderPlate, 1.0, 1.0, 1.0);
    assert!((s + 0.0215293).abs() < 5e-6);
    assert!((c + 0.0114173).abs() < 5e-6);
    assert_eq!(pfa_zeroth(Geometry::SpherePlate, 1.0, 2.0, 1.0), s / 4.0);
    assert_eq!(pfa_zeroth(Geometry::SpherePlate, 1.0, 1.0, 2.0), 2.0 * s);
    assert!((pfa_zeroth(Geometry::CylinderPlate, 4.0, 1.0, 1.0) / c - 2.0).abs() < 1e-15);
}

#[test]
fn reference_constants() {
    let f = REFERENCE_FITS;
    assert_eq!((f.sphere.c1, f.sphere.c2), (0.35, -1.92));
    assert_eq!((f.cylinder.c1, f.cylinder.c2), (0.21, -0.66));
    assert_eq!(f.sphere_asymptote, 180.0 / std::f64::consts::PI.powi(4));
    assert!((f.sphere_asymptote - 1.8482).abs() < 1e-3);
    assert_eq!(f.cylinder_pfa_linear_range, (-0.92, -0.25));
    assert!((f.cylinder.central(0.05) - 1.00885).abs() < 1e-12);
    assert!((f.sphere.central(0.05) - 1.0127).abs() < 1e-12);
}

#[test]
fn validity_bounds_reproduce_quoted_values() {
    let b = sphere_validity_bound(0.001, 0.0).unwrap();
    assert!((b.x_bound / 0.00073 - 1.0).abs() < 0.15, "{b:?}");
    let b = sphere_validity_bound(0.001, 0.01).unwrap();
    assert!((b.x_bound / 0.00755 - 1.0).abs() < 0.15, "{b:?}");
    assert!(!b.at_lower_edge);
}

#[test]
fn separated_bands_report_the_lower_edge() {
    let b = validity_bound(|_| (2.0, 3.0), |_| (0.0, 1.0), 0.0, (0.0, 0.1), 101).unwrap();
    assert!(b.at_lower_edge && b.x_bound == 0.0);
    assert!(matches!(
        validity_bound(|_| (0.0, 2.0), |_| (0.5, 1.0), 0.0, (0.0, 0.1), 101),
        Err(Error::NoBoundInRange { .. })
    ));
}

proptest! {
    #[test]
    fn band_ordered_and_shrinks_to_one(x in 1e-9f64..0.1) {
        let (lo, hi) = pfa_band_sphere(1.0, x);
        prop_assert!(lo <= hi);
        let (l2, h2) = pfa_band_sphere(1.0, x * 1e-6);
        prop_assert!((1.0 - l2).abs() < 1e-6 && (1.0 - h2).abs() < 1e-6);
    }

    #[test]
    fn fits_positive_and_above_pfa(x in 1e-9f64..=0.1) {
        for g in [Geometry::SpherePlate, Geometry::CylinderPlate] {
            prop_assert!(REFERENCE_FITS.fit(g).central(x) > 0.0);
        }
        prop_assert!(REFERENCE_FITS.sphere.central(x) > pfa_band_sphere(1.0, x).1);
    }

    #[test]
    fn fit_curve_domain(x in -1.0f64..1.0) {
        let r = fit_curve(Geometry::SpherePlate, x);
        prop_assert_eq!(r.is_ok(), (0.0..0.1).contains(&x));
    }

    #[test]
    fn bound_nondecreasing_in_tolerance(t1 in 0.0f64..0.02, t2 in 0.0f64..0.02, w in 0.0005f64..0.005) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = sphere_validity_bound(w, lo).unwrap().x_bound;
        let b = sphere_validity_bound(w, hi).unwrap().x_bound;
        prop_assert!(a <= b);
    }
}
