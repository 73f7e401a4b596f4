mod common;

use cliquepart::heuristic::{
    contract, expand, heuristic_left_branch, heuristic_partition, heuristic_right_branch, heuristic_run,
    HeuristicConfig, StartMode,
};
use cliquepart::oracle::brute_force_optimum;
use cliquepart::{partition_weight, Partition};
use common::random_signed_graph;
use proptest::prelude::*;

#[test]
fn best_of_fifty_seeds_usually_optimal() {
    let instances = 100;
    let mut hits = 0;
    for s in 0..instances {
        let n = 4 + (s as usize % 6);
        let g = random_signed_graph(1000 + s, n, 0.5, 5);
        let (opt, _) = brute_force_optimum(&g).unwrap();
        let best = (0..50)
            .map(|seed| partition_weight(&g, &heuristic_partition(&g, &HeuristicConfig::with_seed(seed))).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(best <= opt + 1e-9);
        if (best - opt).abs() <= 1e-9 {
            hits += 1;
        }
    }
    println!("best-of-50 optimal on {hits}/{instances}");
    assert!(hits * 10 >= instances * 9, "{hits}/{instances}");
}

#[test]
fn right_branch_with_zero_delta_is_plain_heuristic() {
    for seed in 0..20 {
        let g = random_signed_graph(seed, 8, 0.5, 5);
        let cfg = HeuristicConfig::with_seed(seed);
        assert_eq!(heuristic_right_branch(&g, (0, 1, 2), 0.0, &cfg), heuristic_partition(&g, &cfg));
    }
}

#[test]
fn left_branch_with_no_sets_is_plain_heuristic() {
    let g = random_signed_graph(7, 8, 0.5, 5);
    let cfg = HeuristicConfig::default();
    assert_eq!(heuristic_left_branch(&g, &[], &cfg).unwrap(), heuristic_partition(&g, &cfg));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_is_a_lower_bound_and_beats_baselines(seed in any::<u64>(), n in 1usize..=9, hseed in 0u64..5, together in any::<bool>()) {
        let g = random_signed_graph(seed, n, 0.5, 5);
        let cfg = HeuristicConfig {
            seed: hseed,
            start_mode: if together { StartMode::Together } else { StartMode::Separate },
            ..Default::default()
        };
        let run = heuristic_run(&g, &cfg);
        let w = partition_weight(&g, &run.partition).unwrap();
        prop_assert!((w - run.objective).abs() < 1e-9);
        let (opt, _) = brute_force_optimum(&g).unwrap();
        prop_assert!(w <= opt + 1e-9);
        prop_assert!(w >= partition_weight(&g, &Partition::singletons(n)).unwrap() - 1e-9);
        prop_assert!(w >= partition_weight(&g, &Partition::together(n)).unwrap() - 1e-9);
    }

    #[test]
    fn deterministic_per_seed(seed in any::<u64>(), hseed in any::<u64>()) {
        let g = random_signed_graph(seed, 12, 0.5, 5);
        let cfg = HeuristicConfig::with_seed(hseed);
        prop_assert_eq!(heuristic_partition(&g, &cfg), heuristic_partition(&g, &cfg));
    }

    #[test]
    fn trace_is_monotone(seed in any::<u64>(), together in any::<bool>()) {
        let g = random_signed_graph(seed, 14, 0.5, 5);
        let cfg = HeuristicConfig {
            start_mode: if together { StartMode::Together } else { StartMode::Separate },
            ..Default::default()
        };
        let run = heuristic_run(&g, &cfg);
        let mut last = run.start_objective;
        for step in &run.trace {
            prop_assert!(step.gain > 0.0);
            prop_assert!(step.objective > last);
            last = step.objective;
        }
        prop_assert!(run.objective >= last - 1e-9);
    }

    #[test]
    fn contraction_preserves_weight(seed in any::<u64>(), labels in proptest::collection::vec(0usize..3, 6)) {
        let g = random_signed_graph(seed, 9, 0.6, 5);
        let sets = vec![vec![0, 3, 5], vec![1, 7]];
        let (c, map) = contract(&g, &sets).unwrap();
        let p = Partition::from_assignment(&labels[..c.node_count()]);
        let lifted = expand(&p, &map);
        prop_assert!((partition_weight(&c, &p).unwrap() - partition_weight(&g, &lifted).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn left_branch_keeps_sets_together(seed in any::<u64>()) {
        let g = random_signed_graph(seed, 10, 0.5, 5);
        let sets = vec![vec![2, 4, 9], vec![0, 1]];
        let p = heuristic_left_branch(&g, &sets, &HeuristicConfig::default()).unwrap();
        for s in &sets {
            for &v in s {
                prop_assert!(p.same_cluster(s[0], v));
            }
        }
    }

    #[test]
    fn right_branch_is_a_lower_bound(seed in any::<u64>(), delta in 0.0f64..6.0) {
        let g = random_signed_graph(seed, 8, 0.5, 5);
        let p = heuristic_right_branch(&g, (1, 3, 5), delta, &HeuristicConfig::default());
        let (opt, _) = brute_force_optimum(&g).unwrap();
        prop_assert!(partition_weight(&g, &p).unwrap() <= opt + 1e-9);
    }
}
