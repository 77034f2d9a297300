use approx::assert_relative_eq;
use proptest::prelude::*;

use wlcasimir::pfa::REFERENCE_FITS;
use wlcasimir::stats::*;
use wlcasimir::Error;

#[test]
fn jackknife_examples() {
    let e = jackknife(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!((e.error - 0.6455).abs() < 1e-4);
    assert_eq!(jackknife(&[5.0, 5.0, 5.0]).unwrap().error, 0.0);
    let e = jackknife(&[0.0, 2.0]).unwrap();
    assert_relative_eq!(e.value, 1.0);
    assert_relative_eq!(e.error, 1.0);
    assert!(matches!(jackknife(&[1.0]), Err(Error::TooFewBlocks(1))));
}

#[test]
fn fit_recovers_synthetic_polynomial() {
    let pts: Vec<FitPoint> = (1..10)
        .map(|i| {
            let x = i as f64 / 100.0;
            FitPoint { x, y: 1.0 + 0.35 * x - 1.92 * x * x, sigma: 1e-9 }
        })
        .collect();
    let f = constrained_fit(&pts, 2).unwrap();
    assert!((f.coefficients[0] - 0.35).abs() < 1e-4);
    assert!((f.coefficients[1] + 1.92).abs() < 1e-4);
    assert_eq!(f.eval(0.0), 1.0);
}

#[test]
fn linear_fit_of_sphere_reference_matches_quoted_slope() {
    let pts: Vec<FitPoint> = (1..10)
        .map(|i| {
            let x = i as f64 / 100.0;
            let y = REFERENCE_FITS.sphere.central(x);
            FitPoint { x, y, sigma: 0.001 * y }
        })
        .collect();
    let f = constrained_fit(&pts, 1).unwrap();
    let c = REFERENCE_FITS.sphere_linear;
    // the quadratic curve gives about 0.21, within three quoted errors
    assert!((f.coefficients[0] - c.value).abs() <= 3.0 * c.error, "{:?}", f.coefficients);
}

#[test]
fn singular_and_out_of_range_fits() {
    let p = FitPoint { x: 0.05, y: 1.0, sigma: 0.01 };
    assert!(matches!(constrained_fit(&[p, p], 2), Err(Error::SingularFit)));
    let far = FitPoint { x: 0.1, ..p };
    assert!(matches!(constrained_fit(&[far], 1), Err(Error::FitRange(_))));
}

fn points() -> impl Strategy<Value = Vec<FitPoint>> {
    prop::collection::vec((0.001f64..0.099, 0.9f64..1.1, 1e-3f64..1e-2), 3..12).prop_map(|v| {
        v.into_iter().map(|(x, y, sigma)| FitPoint { x, y, sigma }).collect()
    })
}

proptest! {
    #[test]
    fn jackknife_of_mean_is_standard_error(v in prop::collection::vec(-10.0f64..10.0, 2..60)) {
        let e = jackknife(&v).unwrap();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sem = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n * (n - 1.0))).sqrt();
        prop_assert!((e.value - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        prop_assert!((e.error - sem).abs() <= 1e-12 * (1.0 + sem));
    }

    #[test]
    fn blocked_mean_of_equal_blocks_is_plain_jackknife(v in prop::collection::vec(-5.0f64..5.0, 20..21)) {
        let blocks: Vec<f64> = v.chunks(2).map(|c| c.iter().sum::<f64>() / 2.0).collect();
        let a = blocked_mean(&v, 10).unwrap();
        let b = jackknife(&blocks).unwrap();
        prop_assert!((a.value - b.value).abs() < 1e-12 && (a.error - b.error).abs() < 1e-12);
    }

    #[test]
    fn fit_invariant_under_reordering(pts in points(), order in 1usize..3) {
        let f = constrained_fit(&pts, order);
        let mut rev = pts.clone();
        rev.reverse();
        let g = constrained_fit(&rev, order);
        if let (Ok(f), Ok(g)) = (f, g) {
            for (a, b) in f.coefficients.iter().zip(&g.coefficients) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
            }
            let mut rf = f.residuals(&pts);
            let mut rg = g.residuals(&rev);
            rg.reverse();
            for (a, b) in rf.drain(..).zip(rg) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn fit_invariant_under_sigma_rescaling(pts in points(), k in 0.1f64..10.0) {
        let scaled: Vec<FitPoint> = pts.iter().map(|p| FitPoint { sigma: p.sigma * k, ..*p }).collect();
        if let (Ok(f), Ok(g)) = (constrained_fit(&pts, 1), constrained_fit(&scaled, 1)) {
            prop_assert!((f.coefficients[0] - g.coefficients[0]).abs() <= 1e-9 * (1.0 + f.coefficients[0].abs()));
            prop_assert!((g.errors[0] / f.errors[0] - k).abs() <= 1e-9 * k);
        }
    }
}
