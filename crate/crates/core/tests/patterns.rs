use obstruct_core::nets::{build_nets, build_nets_with_budget, calibrate_net, scale_for_budget, verify_hitting_net, verify_hitting_sampled, HittingMode};
use obstruct_core::pattern::{elementary_epsilon, elementary_pattern, find_hitter, thin_pattern, Pattern, Provenance};
use obstruct_core::primes::{bertrand_prime, is_prime, next_prime};
use obstruct_core::torus::max_circular_gap;
use obstruct_core::{Closure, Error, Leading, PolySeq, Ratio, TorusInterval, TorusPoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trial_division(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn primality_matches_trial_division(n in 0u64..2_000_000) {
        prop_assert_eq!(is_prime(n), trial_division(n));
    }

    #[test]
    fn next_prime_skips_only_composites(n in 0u64..1_000_000) {
        let q = next_prime(n).unwrap();
        prop_assert!(q > n && trial_division(q));
        prop_assert!((n + 1..q).all(|c| !trial_division(c)));
    }

    #[test]
    fn thinning_picks_distinct_indices(n in 1u64..200, extra in 0u64..5000, seed in any::<u64>()) {
        let q = n + extra;
        let p = thin_pattern(n, q, seed).unwrap();
        prop_assert_eq!(p.n() as u64, n);
        prop_assert!(p.indices().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(p.indices().iter().all(|&k| k < q));
        prop_assert_eq!(p.provenance(), Provenance::Thinned { seed });
        prop_assert_eq!(p, thin_pattern(n, q, seed).unwrap());
    }

    #[test]
    fn large_universes_thin_too(n in 1u64..64, seed in any::<u64>()) {
        let q = 1u64 << 40;
        let p = thin_pattern(n, q, seed).unwrap();
        prop_assert_eq!(p.n() as u64, n);
        prop_assert!(p.indices().iter().all(|&k| k < q));
    }

    /// The elementary pattern hits every arc of length `10 n^{-1/2}` for
    /// any lower coefficient.
    #[test]
    fn elementary_gap_bound(m in 4u64..40, b in any::<u64>()) {
        let n = m * m;
        let (pattern, a) = elementary_pattern(n).unwrap();
        prop_assert_eq!(a, Ratio::reciprocal(n).unwrap());
        let f = PolySeq::new(2, Leading::Rational(a), vec![TorusPoint::from_bits(b)]).unwrap();
        let gap = max_circular_gap(&pattern.values(&f)).unwrap();
        prop_assert!(gap <= elementary_epsilon(n), "gap {} bound {}", gap, elementary_epsilon(n));
    }

    #[test]
    fn find_hitter_lands_in_the_target(m in 4u64..40, b in any::<u64>(), start in any::<u64>(), closed in any::<bool>()) {
        let n = m * m;
        let len = elementary_epsilon(n).min(1.0);
        let closure = if closed { Closure::Closed } else { Closure::HalfOpen };
        let target = TorusInterval::new(TorusPoint::from_bits(start), len, closure).unwrap();
        let k = find_hitter(n, TorusPoint::from_bits(b), &target).unwrap();
        prop_assert!(k < n);
        // direct evaluation: k^2/n + B k
        let v = TorusPoint::from_ratio((k * k) as i128, n) + TorusPoint::from_bits(b).mul_int(k);
        prop_assert!(target.contains(v));
    }
}

#[test]
fn bertrand_prime_for_the_desk_instance() {
    let q = bertrand_prime(32, 2).unwrap();
    assert_eq!(q, 1_048_583);
    assert!(trial_division(q));
    assert!((1_048_577..q).all(|c| !trial_division(c)));
    assert!(matches!(bertrand_prime(1, 2), Err(Error::ParameterRange(_))));
}

#[test]
fn short_targets_are_rejected() {
    let target = TorusInterval::new(TorusPoint::ZERO, 0.01, Closure::Closed).unwrap();
    assert!(matches!(find_hitter(64, TorusPoint::ZERO, &target), Err(Error::InvalidInput(_))));
}

/// A passing faithful net certifies the gap bound for coefficients off the
/// net, which is checked here on random real `B`.
#[test]
fn passing_net_certifies_off_net_coefficients() {
    let q = 11;
    let eps = 0.9;
    let pattern = Pattern::range(q, q, Provenance::Explicit).unwrap();
    let a = Ratio::reciprocal(q).unwrap();
    let nets = build_nets(2, q, eps, 1.0).unwrap();
    assert!(nets.is_faithful());
    let rep = verify_hitting_net(&pattern, a, 2, eps, &nets).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.mode, HittingMode::FaithfulNet);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20_000 {
        let f = PolySeq::new(2, Leading::Rational(a), vec![TorusPoint::from_bits(rng.random())]).unwrap();
        assert!(max_circular_gap(&pattern.values(&f)).unwrap() <= eps);
    }
}

#[test]
fn coarse_net_reports_its_effective_epsilon() {
    let q = 101;
    let pattern = thin_pattern(30, q, 3).unwrap();
    let a = Ratio::reciprocal(q).unwrap();
    let nets = build_nets(2, q, 0.5, 0.01).unwrap();
    let rep = verify_hitting_net(&pattern, a, 2, 0.5, &nets).unwrap();
    assert!(matches!(rep.mode, HittingMode::CoarsenedNet { .. }));
    let delta = rep.transfer_slack.unwrap();
    assert!((rep.effective_epsilon.unwrap() - (rep.worst_gap + 2.0 * delta) / 0.9).abs() < 1e-15);
    assert_eq!(rep.pass, rep.worst_gap <= 0.9 * 0.5 - 2.0 * delta);
}

#[test]
fn sampled_check_fails_below_the_spacing_floor() {
    let (pattern, a) = elementary_pattern(64).unwrap();
    let rep = verify_hitting_sampled(&pattern, Leading::Rational(a), 2, 1.0 / 640.0, 500, 1).unwrap();
    assert!(!rep.pass);
    assert_eq!(rep.worst_b.len(), 1);
    let f = PolySeq::new(2, Leading::Rational(a), rep.worst_b.clone()).unwrap();
    assert_eq!(max_circular_gap(&pattern.values(&f)).unwrap(), rep.worst_gap);
}

#[test]
fn sampled_check_is_independent_of_thread_count() {
    let pattern = thin_pattern(20, 1009, 7).unwrap();
    let lead = Leading::Rational(Ratio::reciprocal(1009).unwrap());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| verify_hitting_sampled(&pattern, lead, 3, 0.5, 50_000, 11).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn net_calibration_keeps_its_best_round() {
    let q = 1009;
    let pattern = thin_pattern(12, q, 5).unwrap();
    let a = Ratio::reciprocal(q).unwrap();
    let cells = 200_000;
    let first = {
        let nets = build_nets_with_budget(2, q, 0.3, scale_for_budget(2, q, 0.3, cells), cells).unwrap();
        verify_hitting_net(&pattern, a, 2, 0.3, &nets).unwrap()
    };
    let (nets, best) = calibrate_net(&pattern, q, 2, 0.3, cells, 6).unwrap();
    assert!(nets.total_cells <= cells);
    assert!(best.effective_epsilon.unwrap() <= first.effective_epsilon.unwrap());
    if let Some(e) = best.certified_epsilon() {
        // the certificate holds for coefficients off the net
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5000 {
            let f = PolySeq::new(2, Leading::Rational(a), vec![TorusPoint::from_bits(rng.random())]).unwrap();
            assert!(max_circular_gap(&pattern.values(&f)).unwrap() <= e);
        }
    }
}
