use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wlcasimir::support::{clip_from_below, integrate_inv_t3, union_of_intervals, Interval, IntervalSet};

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn set(pairs: &[(f64, f64)]) -> IntervalSet {
    union_of_intervals(&pairs.iter().map(|&(a, b)| iv(a, b)).collect::<Vec<_>>()).unwrap()
}

fn bounds(s: &IntervalSet) -> Vec<(f64, f64)> {
    s.iter().map(|i| (i.lo, i.hi)).collect()
}

/// Quadratic oracle: merge any two overlapping intervals until none remain.
fn naive_union(input: &[Interval]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = input.iter().map(|i| (i.lo, i.hi)).collect();
    'outer: loop {
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                let (a, b) = (v[i], v[j]);
                if a.0 <= b.1 && b.0 <= a.1 {
                    v[i] = (a.0.min(b.0), a.1.max(b.1));
                    v.swap_remove(j);
                    continue 'outer;
                }
            }
        }
        break;
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

#[test]
fn union_examples() {
    assert_eq!(bounds(&set(&[(1.0, 3.0), (2.0, 5.0), (7.0, 8.0)])), vec![(1.0, 5.0), (7.0, 8.0)]);
    assert!(union_of_intervals(&[]).unwrap().is_empty());
}

#[test]
fn union_matches_quadratic_oracle_on_1000_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let input: Vec<Interval> = (0..1000)
        .map(|_| {
            let lo = rng.random_range(0.0..1000.0);
            iv(lo, lo + rng.random_range(0.0..1.5))
        })
        .collect();
    assert_eq!(bounds(&union_of_intervals(&input).unwrap()), naive_union(&input));
}

#[test]
fn clip_examples() {
    let s = set(&[(1.0, 5.0), (7.0, 8.0)]);
    assert_eq!(bounds(&clip_from_below(&s, 6.0)), vec![(7.0, 8.0)]);
    assert_eq!(clip_from_below(&s, 0.0), s);
    assert_eq!(bounds(&clip_from_below(&s, 4.0)), vec![(4.0, 5.0), (7.0, 8.0)]);
}

#[test]
fn integral_examples() {
    assert_relative_eq!(integrate_inv_t3(&set(&[(1.0, 2.0)])).unwrap(), 0.375, epsilon = 1e-15);
    assert_relative_eq!(integrate_inv_t3(&set(&[(4.0, f64::INFINITY)])).unwrap(), 0.03125, epsilon = 1e-15);
    assert_relative_eq!(integrate_inv_t3(&set(&[(1.0, 2.0), (3.0, 4.0)])).unwrap(), 0.399_305_555_555_555_6, epsilon = 1e-12);
    assert!(integrate_inv_t3(&set(&[(0.0, 1.0)])).is_err());
}

#[test]
fn malformed_intervals_rejected() {
    assert!(Interval::new(2.0, 1.0).is_err());
    assert!(Interval::new(-1.0, 1.0).is_err());
    assert!(Interval::new(f64::NAN, 1.0).is_err());
    let bad = Interval { lo: 3.0, hi: 1.0 };
    assert!(union_of_intervals(&[bad]).is_err());
}

fn interval() -> impl Strategy<Value = Interval> {
    (0.01f64..20.0, 0.0f64..5.0).prop_map(|(lo, w)| iv(lo, lo + w))
}

fn intervals() -> impl Strategy<Value = Vec<Interval>> {
    prop::collection::vec(interval(), 0..40)
}

fn is_canonical(s: &IntervalSet) -> bool {
    s.as_slice().windows(2).all(|w| w[0].hi < w[1].lo) && s.iter().all(|i| i.lo <= i.hi)
}

/// Midpoint rule in `u = ln T`, where `dT/T^3 = e^{-2u} du`.
fn riemann(s: &IntervalSet, nodes: usize) -> f64 {
    let (u0, u1) = ((0.005f64).ln(), (40.0f64).ln());
    let du = (u1 - u0) / nodes as f64;
    (0..nodes)
        .map(|i| u0 + (i as f64 + 0.5) * du)
        .filter(|u| s.contains(u.exp()))
        .map(|u| (-2.0 * u).exp() * du)
        .sum()
}

proptest! {
    #[test]
    fn union_is_canonical_and_matches_oracle(v in intervals()) {
        let s = union_of_intervals(&v).unwrap();
        prop_assert!(is_canonical(&s));
        prop_assert_eq!(bounds(&s), naive_union(&v));
    }

    #[test]
    fn union_idempotent(v in intervals()) {
        let s = union_of_intervals(&v).unwrap();
        prop_assert_eq!(s.union(&s), s.clone());
        prop_assert_eq!(union_of_intervals(s.as_slice()).unwrap(), s);
    }

    #[test]
    fn union_commutative_and_associative(a in intervals(), b in intervals(), c in intervals()) {
        let (a, b, c) = (union_of_intervals(&a).unwrap(), union_of_intervals(&b).unwrap(), union_of_intervals(&c).unwrap());
        prop_assert_eq!(a.union(&b), b.union(&a));
        prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
    }

    #[test]
    fn integral_subadditive(a in intervals(), b in intervals()) {
        let (a, b) = (union_of_intervals(&a).unwrap(), union_of_intervals(&b).unwrap());
        let (ia, ib) = (integrate_inv_t3(&a).unwrap(), integrate_inv_t3(&b).unwrap());
        let iu = integrate_inv_t3(&a.union(&b)).unwrap();
        prop_assert!(iu <= (ia + ib) * (1.0 + 1e-12));
        let disjoint = a.iter().all(|x| b.iter().all(|y| x.hi < y.lo || y.hi < x.lo));
        if disjoint {
            prop_assert!((iu - ia - ib).abs() <= 1e-12 * (ia + ib));
        }
    }

    #[test]
    fn integral_matches_riemann_sum(v in prop::collection::vec((0.01f64..20.0, 0.05f64..5.0), 0..8)) {
        let s = set(&v.iter().map(|&(lo, w)| (lo, lo + w)).collect::<Vec<_>>());
        let exact = integrate_inv_t3(&s).unwrap();
        let grid = riemann(&s, 200_000);
        // each interval edge costs at most about one cell of weight du / T^2
        let du = 8000f64.ln() / 200_000.0;
        let tol: f64 = s.iter().map(|i| 1.01 * du * (1.0 / (i.lo * i.lo) + 1.0 / (i.hi * i.hi))).sum::<f64>() + 1e-9;
        prop_assert!((exact - grid).abs() <= tol, "exact {} grid {}", exact, grid);
    }

    #[test]
    fn clip_is_intersection(v in intervals(), t in 0.0f64..25.0, probe in 0.0f64..30.0) {
        let s = union_of_intervals(&v).unwrap();
        let c = clip_from_below(&s, t);
        prop_assert!(is_canonical(&c));
        prop_assert_eq!(c.contains(probe), s.contains(probe) && probe >= t);
    }
}
