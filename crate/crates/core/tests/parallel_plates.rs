use std::f64::consts::PI;

use approx::assert_relative_eq;

use wlcasimir::loops::ExtentStats;
use wlcasimir::parallel_plates::*;
use wlcasimir::{generate_ensemble, Error, LoopGenerator, LoopParams};

#[test]
fn analytic_examples() {
    let e = |d: f64, a: f64| analytic_pp_energy(&ParallelPlatesConfig::new(a, 1.0, d).unwrap());
    assert_relative_eq!(e(4.0, 1.0), -PI * PI / 1440.0, max_relative = 1e-13);
    assert!((e(4.0, 1.0) + 6.8539e-3).abs() < 1e-7);
    assert_relative_eq!(e(3.0, 1.0), -zeta(3.0) / (16.0 * PI), max_relative = 1e-13);
    assert!((e(3.0, 1.0) + 0.023910).abs() < 1e-5);
    assert_relative_eq!(e(2.0, 1.0), -PI / 24.0, max_relative = 1e-13);
    assert!((e(2.0, 1.0) + 0.13090).abs() < 1e-5);
    assert_eq!(e(4.0, 2.0), e(4.0, 1.0) / 8.0);
}

#[test]
fn moment_identity_examples() {
    assert!((moment_identity(1.0) - 1.77245).abs() < 1e-5);
    assert!((moment_identity(2.0) - 3.28987).abs() < 1e-5);
    assert_relative_eq!(moment_identity(4.0), 2.0 * PI.powi(4) / 15.0, max_relative = 1e-13);
    assert!((moment_identity(4.0) - 12.98781).abs() < 1e-4);
    // Gamma(3/2) = sqrt(pi)/2, so <L^3> = 3 sqrt(pi) zeta(3)
    assert_relative_eq!(moment_identity(3.0), 3.0 * PI.sqrt() * zeta(3.0), max_relative = 1e-13);
}

#[test]
fn monte_carlo_moments_approach_the_identity_from_below() {
    let g = LoopGenerator::new(LoopParams::new(10_000, 10_000, 1, 31).unwrap()).unwrap();
    let st = ExtentStats::compute(&g);
    for d in [1.0, 2.0, 3.0, 4.0] {
        let m = st.moment(d, 50).unwrap();
        let exact = moment_identity(d);
        // discretization allowance ~ d * 1.17 / sqrt(N) relative, plus 3 sigma
        let allowance = d * 1.2 / 100.0 * exact + 3.0 * m.error;
        assert!((m.value - exact).abs() < allowance, "D={d}: {m:?} vs {exact}");
    }
    let coarse = generate_ensemble(10_000, 1_000, 1, 32).unwrap();
    for d in [1.0, 4.0] {
        let m = polymer_moment(&coarse, d).unwrap();
        assert!(m.value + 3.0 * m.error < moment_identity(d), "D={d}: {m:?}");
    }
}

#[test]
fn energy_follows_the_moment_and_scales_with_gap() {
    let e = generate_ensemble(2_000, 2_000, 1, 33).unwrap();
    let one = energy_from_extents(&ParallelPlatesConfig::new(1.0, 1.0, 4.0).unwrap(), &e).unwrap();
    let two = energy_from_extents(&ParallelPlatesConfig::new(2.0, 3.0, 4.0).unwrap(), &e).unwrap();
    assert_relative_eq!(two.energy, one.energy * 3.0 / 8.0, max_relative = 1e-14);
    let m = polymer_moment(&e, 4.0).unwrap();
    assert_relative_eq!(one.energy, -m.value / (12.0 * 16.0 * PI * PI), max_relative = 1e-14);
    assert!(one.energy < 0.0 && one.energy > one.analytic);
    let d2 = energy_from_extents(&ParallelPlatesConfig::new(1.0, 1.0, 2.0).unwrap(), &e).unwrap();
    // finite-N bias is about 3% at N = 2000
    assert!((d2.energy / d2.analytic - 1.0).abs() < 0.03 + 3.0 * d2.energy_err / d2.analytic.abs(), "{d2:?}");
}

#[test]
fn only_the_z_coordinate_enters() {
    let z = generate_ensemble(8_000, 1_000, 3, 34).unwrap().project(&[2]).unwrap();
    let native = generate_ensemble(8_000, 1_000, 1, 35).unwrap();
    let (a, b) = (polymer_moment(&z, 4.0).unwrap(), polymer_moment(&native, 4.0).unwrap());
    assert!((a.value - b.value).abs() < 3.0 * a.error.hypot(b.error));
}

#[test]
fn invalid_inputs() {
    let e3 = generate_ensemble(4, 100, 3, 1).unwrap();
    assert!(matches!(polymer_moment(&e3, 2.0), Err(Error::DimensionMismatch { expected: 1, found: 3 })));
    let e1 = generate_ensemble(4, 100, 1, 1).unwrap();
    assert!(polymer_moment(&e1, -1.0).is_err());
    assert!(polymer_moment(&e1, 2.5).is_ok());
    assert!(energy_from_extents(&ParallelPlatesConfig::new(1.0, 1.0, 3.5).unwrap(), &e1).is_err());
    assert!(ParallelPlatesConfig::new(1.0, -1.0, 4.0).is_err());
}
