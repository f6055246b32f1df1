use keygraph::exactprob::*;
use keygraph::{validate_scheme, SchemeParams};
use proptest::prelude::*;

fn arb_scheme() -> impl Strategy<Value = SchemeParams> {
    (1usize..5, 2u64..400).prop_flat_map(|(r, pool)| {
        (
            prop::collection::vec(0.05f64..1.0, r),
            prop::collection::vec(1u64..pool, r),
        )
            .prop_map(move |(w, mut ks)| {
                ks.sort_unstable();
                let total: f64 = w.iter().sum();
                let mut probs: Vec<f64> = w.iter().map(|x| x / total).collect();
                let head: f64 = probs[..r - 1].iter().sum();
                probs[r - 1] = 1.0 - head;
                validate_scheme(r, &probs, &ks, pool).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn symmetric_and_monotone(theta in arb_scheme()) {
        let r = theta.num_classes();
        for i in 0..r {
            for j in 0..r {
                let p = edge_prob(i, j, &theta).unwrap();
                prop_assert_eq!(p, edge_prob(j, i, &theta).unwrap());
                prop_assert!((0.0..=1.0).contains(&p));
                if i + 1 < r {
                    prop_assert!(edge_prob(i + 1, j, &theta).unwrap() >= p);
                }
            }
        }
        let lambda = mean_edge_probs(&theta);
        prop_assert!(lambda.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lower_bound_chain(theta in arb_scheme()) {
        let r = theta.num_classes();
        for i in 0..r {
            for j in 0..r {
                let p = edge_prob(i, j, &theta).unwrap();
                let x = edge_prob_small_limit(i, j, &theta).unwrap();
                // 1 - p <= exp(-Ki Kj / P)
                prop_assert!(1.0 - p <= (-x).exp() + 1e-15);
                prop_assert!(edge_prob_lower_bound(i, j, &theta).unwrap() <= p + 1e-15);
                prop_assert!(p <= x.min(1.0) + 1e-15);
            }
        }
    }

    #[test]
    fn popoviciu_holds(theta in arb_scheme()) {
        let bound = popoviciu_bound(&theta);
        prop_assert!(no_overlap_variance(&theta) <= bound + 1e-15);
        prop_assert!(bound <= 0.25);
    }

    #[test]
    fn second_moment_ratio_at_least_close_to_one(theta in arb_scheme(), n in 2u64..50) {
        // E[χ1χ2] / E[χ1]² is a ratio of probabilities; it must be finite and
        // nonnegative whenever class-1 nodes can be isolated.
        if mean_edge_prob(0, &theta).unwrap() < 1.0 {
            let ratio = second_moment_ratio(n, &theta).unwrap();
            prop_assert!(ratio.is_finite() && ratio >= 0.0);
        }
    }
}

#[test]
fn ratio_power_grid() {
    for a in [1.0, 1.5, 2.0, 3.0] {
        for pool in 2..=60u64 {
            for ki in 1..pool {
                for kj in 1..pool {
                    let lhs = ratio_power_lhs(a, ki, kj, pool).unwrap();
                    let rhs = (a * log_ratio_no_overlap(ki, kj, pool).unwrap()).exp();
                    assert!(
                        lhs <= rhs + 1e-12,
                        "a={a} Ki={ki} Kj={kj} P={pool}: {lhs} > {rhs}"
                    );
                }
            }
        }
    }
}

#[test]
fn psi_reconstructs_log() {
    for step in 0..=9000 {
        let x = step as f64 * 1e-4;
        let psi = psi(x).unwrap();
        assert!(((1.0 - x).ln() + x + psi).abs() <= 1e-12, "x = {x}");
        assert!(psi >= 0.0);
    }
    let x = 1e-3;
    assert!((psi(x).unwrap() / (x * x) - 0.5).abs() < 1e-3);
}

#[test]
fn small_limit_convergence() {
    let mut errors = Vec::new();
    for pool in [10_000u64, 100_000, 1_000_000, 10_000_000] {
        let theta = validate_scheme(1, &[1.0], &[10], pool).unwrap();
        let p = edge_prob(0, 0, &theta).unwrap();
        let err = (p * pool as f64 / 100.0 - 1.0).abs();
        if 100.0 / (pool as f64) < 1e-3 {
            assert!(err < 0.02);
        }
        errors.push(err);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn lower_bound_ratio_tends_to_one() {
    let mut prev = 0.0;
    for pool in [1_000u64, 100_000, 10_000_000] {
        let theta = validate_scheme(1, &[1.0], &[5], pool).unwrap();
        let ratio = edge_prob_lower_bound(0, 0, &theta).unwrap() / edge_prob(0, 0, &theta).unwrap();
        assert!(ratio <= 1.0 && ratio > prev);
        prev = ratio;
    }
    assert!(1.0 - prev < 1e-5);
}

#[test]
fn large_pool_no_overflow() {
    let theta = validate_scheme(2, &[0.5, 0.5], &[1000, 2000], 10_000_000).unwrap();
    let p = edge_prob(0, 1, &theta).unwrap();
    assert!(p > 0.18 && p < 0.19);
    assert!(expected_isolated(10_000_000, &theta).unwrap() >= 0.0);
}

#[test]
fn second_moment_ratio_tends_to_one_below_threshold() {
    use keygraph::scaling::{instantiate, PoolRule, ScalingPreset};
    let preset = ScalingPreset::new(PoolRule::NLogN, vec![1.0, 2.0], vec![0.5, 0.5], 0.5).unwrap();
    let mut devs = Vec::new();
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let theta = instantiate(&preset, n).unwrap();
        devs.push((second_moment_ratio(n, &theta).unwrap() - 1.0).abs());
    }
    assert!(devs[3] < devs[0], "{devs:?}");
    assert!(devs[3] < 0.05, "{devs:?}");
}
