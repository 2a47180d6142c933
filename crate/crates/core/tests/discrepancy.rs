use obstruct_core::discrepancy::{WitnessKind, erdos_turan_bound, exact_discrepancy, exact_discrepancy_capped, grid_discrepancy};
use obstruct_core::torus::FULL_TURN;
use obstruct_core::{Closure, Error, TorusInterval, TorusPoint};
use proptest::prelude::*;

/// `|count/N − |I||` for one arc.
fn deviation(points: &[TorusPoint], arc: &TorusInterval) -> f64 {
    let count = points.iter().filter(|&&p| arc.contains(p)).count() as f64;
    (count / points.len() as f64 - arc.length()).abs()
}

/// Brute force over every arc whose endpoints are data points, in both
/// closure conventions plus the open complement of each closed arc.
fn endpoint_oracle(points: &[TorusPoint]) -> f64 {
    let n = points.len() as f64;
    let mut best: f64 = 0.0;
    for &a in points {
        for &b in points {
            let len = a.arc_to(b) as u128;
            let closed = TorusInterval::from_bits(a, len, Closure::Closed);
            let count = points.iter().filter(|&&p| closed.contains(p)).count() as f64;
            best = best.max(count / n - len as f64 / FULL_TURN as f64);
            // open arc (a, b): length len, excludes both ends; (a, a) is the
            // whole circle minus a
            let open_len = if len == 0 { FULL_TURN } else { len };
            let inside = points
                .iter()
                .filter(|&&p| {
                    let t = a.arc_to(p) as u128;
                    t > 0 && t < open_len
                })
                .count() as f64;
            best = best.max(open_len as f64 / FULL_TURN as f64 - inside / n);
        }
    }
    best
}

fn points_strategy(max: usize) -> impl Strategy<Value = Vec<TorusPoint>> {
    prop_oneof![
        prop::collection::vec(any::<u64>().prop_map(TorusPoint::from_bits), 1..max),
        prop::collection::vec((0i128..16).prop_map(|k| TorusPoint::from_ratio(k, 16)), 1..max),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_matches_endpoint_oracle(points in points_strategy(30)) {
        let exact = exact_discrepancy(&points).unwrap().exact_discrepancy;
        let oracle = endpoint_oracle(&points);
        prop_assert!((exact - oracle).abs() < 1e-12, "exact {} oracle {}", exact, oracle);
    }

    /// Attained witnesses are evaluated as given; limit witnesses are the
    /// open arc `(start, start + length)`.
    #[test]
    fn witness_reproduces_the_value(points in points_strategy(30)) {
        let rep = exact_discrepancy(&points).unwrap();
        let arc = rep.witness_interval;
        let w = match rep.witness_kind {
            WitnessKind::Attained => deviation(&points, &arc),
            WitnessKind::Limit => {
                let inside = points
                    .iter()
                    .filter(|&&p| {
                        let t = arc.start.arc_to(p) as u128;
                        t > 0 && t < arc.length_bits
                    })
                    .count() as f64;
                arc.length() - inside / points.len() as f64
            }
        };
        prop_assert!((w - rep.exact_discrepancy).abs() < 1e-12);
    }

    #[test]
    fn grid_estimate_is_a_close_lower_bound(points in points_strategy(40), g in 10u64..200) {
        let exact = exact_discrepancy(&points).unwrap().exact_discrepancy;
        let grid = grid_discrepancy(&points, g).unwrap().exact_discrepancy;
        prop_assert!(grid <= exact + 1e-12);
        prop_assert!(grid >= exact - 2.0 / g as f64 - 1e-12);
    }

    #[test]
    fn erdos_turan_dominates(points in points_strategy(60), m in 1u64..80) {
        let exact = exact_discrepancy(&points).unwrap().exact_discrepancy;
        prop_assert!(erdos_turan_bound(&points, m).unwrap() >= exact);
    }

    #[test]
    fn discrepancy_is_rotation_invariant(points in points_strategy(25), shift in any::<u64>()) {
        let moved: Vec<TorusPoint> = points.iter().map(|&p| p + TorusPoint::from_bits(shift)).collect();
        let a = exact_discrepancy(&points).unwrap().exact_discrepancy;
        let b = exact_discrepancy(&moved).unwrap().exact_discrepancy;
        prop_assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn equally_spaced_points_have_discrepancy_one_over_n() {
    for n in [1u64, 2, 3, 7, 64, 100] {
        let pts: Vec<TorusPoint> = (0..n).map(|k| TorusPoint::from_ratio(k as i128, n)).collect();
        let d = exact_discrepancy(&pts).unwrap().exact_discrepancy;
        assert!((d - 1.0 / n as f64).abs() < 1e-12, "n = {n}: {d}");
    }
}

#[test]
fn single_point_has_discrepancy_one() {
    let d = exact_discrepancy(&[TorusPoint::from_f64(0.3)]).unwrap().exact_discrepancy;
    assert!((d - 1.0).abs() < 1e-12);
}

#[test]
fn gauss_quadratic_example() {
    // 64 points k^2/641 with cutoff 100
    let pts: Vec<TorusPoint> = (0..64i128).map(|k| TorusPoint::from_ratio(k * k, 641)).collect();
    let exact = exact_discrepancy(&pts).unwrap();
    let rep = exact.with_erdos_turan(&pts, 100).unwrap();
    assert!(rep.et_bound.unwrap() >= rep.exact_discrepancy);
    assert_eq!(rep.et_cutoff, Some(100));
}

#[test]
fn errors_are_reported() {
    assert_eq!(exact_discrepancy(&[]).unwrap_err(), Error::EmptyPointSet);
    let pts = vec![TorusPoint::ZERO; 11];
    assert!(matches!(exact_discrepancy_capped(&pts, 10), Err(Error::OverCap { n: 11, cap: 10 })));
}
