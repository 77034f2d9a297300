use std::f64::consts::PI;

use approx::assert_relative_eq;

use wlcasimir::cylinder_plate::*;
use wlcasimir::{generate_ensemble, Error, LoopGenerator, LoopParams, QuadratureSpec, UnitLoopEnsemble};

fn cfg(r: f64, a: f64) -> CylinderPlateConfig {
    CylinderPlateConfig::new(r, a).unwrap()
}

#[test]
fn circle_roots_match_the_sphere_algebra() {
    // x = (2, 0); the point (-1, 0) is in the circle for T in [1, 9]; min_z = 0 keeps T_min infinite,
    // so add a second point below the center to reach the plate at T = (3 / 3)^2 = 1
    let pts = [-1.0, 0.0, 0.0, -3.0];
    let s = loop_support_2d(&cfg(1.0, 1.0), &[2.0, 0.0], &pts);
    let iv = s.as_slice();
    assert_eq!(iv.len(), 1);
    assert_relative_eq!(iv[0].lo, 1.0, max_relative = 1e-14);
    assert_relative_eq!(iv[0].hi, 9.0, max_relative = 1e-14);
}

#[test]
fn support_matches_theta_oracle() {
    let e = generate_ensemble(50, 500, 2, 21).unwrap();
    let c = cfg(1.0, 1.0);
    let mut checked = 0;
    for (l, lp) in e.iter_loops().enumerate() {
        let x = [-1.5 + 3.0 * (l as f64 / 49.0), -1.6 + 0.05 * (l % 7) as f64];
        if x[0] * x[0] + x[1] * x[1] <= 1.0 {
            continue;
        }
        let s = loop_support_2d(&c, &x, lp);
        for i in 0..2_000 {
            let t = 10f64.powf(-3.0 + 6.0 * i as f64 / 1_999.0);
            let q = t.sqrt();
            let inside = lp.chunks_exact(2).any(|y| (x[0] + q * y[0]).powi(2) + (x[1] + q * y[1]).powi(2) < 1.0);
            let below = lp.chunks_exact(2).any(|y| x[1] + q * y[1] <= -2.0);
            assert_eq!(s.contains(t), inside && below, "loop {l}, T = {t}");
        }
        checked += 1;
    }
    assert!(checked > 30);
}

#[test]
fn mirror_points_have_equal_densities() {
    let e = generate_ensemble(4_000, 1_000, 2, 22).unwrap();
    let c = cfg(1.0, 0.5);
    for x in [0.3, 0.9, 1.6] {
        let l = density_2d(&c, &[-x, -1.3], &e).unwrap();
        let r = density_2d(&c, &[x, -1.3], &e).unwrap();
        assert!((l.eps - r.eps).abs() <= 3.0 * l.eps_err.hypot(r.eps_err), "x = {x}");
        assert!(l.eps < 0.0);
    }
}

#[test]
fn projected_3d_loops_reproduce_2d_loops() {
    let native = generate_ensemble(6_000, 1_000, 2, 23).unwrap();
    let projected = generate_ensemble(6_000, 1_000, 3, 24).unwrap().project(&[0, 2]).unwrap();
    let c = cfg(1.0, 0.5);
    for x in [[0.0, -1.25], [0.7, -1.1], [0.0, 0.0]] {
        let a = density_2d(&c, &x, &native).unwrap();
        let b = density_2d(&c, &x, &projected).unwrap();
        assert!((a.eps - b.eps).abs() <= 3.0 * a.eps_err.hypot(b.eps_err), "{x:?}: {a:?} {b:?}");
    }
}

#[test]
fn small_distance_form_matches_at_small_gap() {
    let e = generate_ensemble(500, 2_000, 2, 25).unwrap();
    let c = cfg(1.0, 0.05);
    for x in [[0.0, -1.025], [0.2, -1.01]] {
        let full = density_2d(&c, &x, &e).unwrap();
        let sd = density_2d_small_distance(&c, &x, &e).unwrap();
        assert_relative_eq!(sd.eps, full.eps, max_relative = 1e-3);
    }
}

#[test]
fn energy_scales_as_inverse_square_length() {
    let g = LoopGenerator::new(LoopParams::new(100, 4_000, 2, 26).unwrap()).unwrap();
    let spec = QuadratureSpec::default();
    let ratios = [0.01, 0.3, 4.0];
    let base: Vec<_> = ratios.iter().map(|&x| cfg(1.0, x)).collect();
    let doubled: Vec<_> = ratios.iter().map(|&x| cfg(2.0, 2.0 * x)).collect();
    let e1 = energies_per_length(&base, &g, &spec).unwrap();
    let e2 = energies_per_length(&doubled, &g, &spec).unwrap();
    for (a, b) in e1.iter().zip(&e2) {
        assert!(a.energy < 0.0);
        assert_relative_eq!(b.energy, a.energy / 4.0, max_relative = 1e-12);
        assert_relative_eq!(b.normalized, a.normalized, max_relative = 1e-12);
    }
}

#[test]
fn normalized_energy_rises_over_a_decade() {
    let g = LoopGenerator::new(LoopParams::new(400, 10_000, 2, 27).unwrap()).unwrap();
    let cfgs: Vec<_> = [0.3, 1.0, 3.0].iter().map(|&x| cfg(1.0, x)).collect();
    let res = energies_per_length(&cfgs, &g, &QuadratureSpec::default()).unwrap();
    assert!(res.windows(2).all(|w| w[1].normalized > w[0].normalized), "{:?}",
        res.iter().map(|r| r.normalized).collect::<Vec<_>>());
    assert!(res.windows(2).all(|w| w[1].energy > w[0].energy));
    assert!((res[0].pfa_zeroth + PI.powi(3) / (1920.0 * 2f64.sqrt()) / 0.3f64.powf(2.5)).abs() < 1e-12);
}

#[test]
fn wrong_dimension_rejected() {
    let e = generate_ensemble(4, 100, 3, 1).unwrap();
    let err = energy_per_length(&cfg(1.0, 1.0), &e, &QuadratureSpec::default()).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 3 }));
    let flat = UnitLoopEnsemble::from_points(2, 3, vec![0.0; 6]).unwrap();
    assert!(density_2d(&cfg(1.0, 1.0), &[0.0, -1.5], &flat).is_err());
}
