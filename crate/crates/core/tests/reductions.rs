mod common;

use cliquepart::oracle::{brute_force_optimum, for_each_partition};
use cliquepart::reductions::{
    abr_to_cp, fisher_portfolio_graph, fisher_z, gen_ba_weighted, gen_correlation_instance, modularity,
    modularity_to_cp, AttributeMatrix, BaParams, ReturnsMatrix,
};
use cliquepart::{partition_weight, Partition, WeightedGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Correlation from raw sums rather than centered deviations.
fn correlation_from_sums(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Newman modularity of an unweighted loop-free graph from its adjacency
/// matrix: `(1/2m) Σ_ij (A_ij - k_i k_j / 2m) [c_i = c_j]`.
fn newman_modularity(n: usize, edges: &[(usize, usize)], assignment: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j) in edges {
        a[i][j] = 1.0;
        a[j][i] = 1.0;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn random_unweighted(seed: u64, n: usize) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let e: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|_| rng.gen_bool(0.4)).collect();
        if !e.is_empty() {
            return e;
        }
    }
}

#[test]
fn modularity_matches_newman_on_every_partition() {
    for seed in 0..10 {
        let n = 3 + seed as usize % 5;
        let edges = random_unweighted(seed, n);
        let g = WeightedGraph::<f64>::from_edges(n, edges.iter().map(|&(i, j)| (i, j, 1.0))).unwrap();
        let cp = modularity_to_cp(&g, 1.0).unwrap();
        let total = 2.0 * edges.len() as f64;
        for_each_partition(n, |a| {
            let p = Partition::from_assignment(a);
            let expected = newman_modularity(n, &edges, a);
            assert!((modularity(&g, &p, 1.0).unwrap() - expected).abs() < 1e-12);
            assert!((partition_weight(&cp, &p).unwrap() - expected * total).abs() < 1e-9);
        });
    }
}

#[test]
fn modularity_optimum_via_cp() {
    for seed in 100..115 {
        let n = 4 + seed as usize % 5;
        let edges = random_unweighted(seed, n);
        let g = WeightedGraph::<f64>::from_edges(n, edges.iter().map(|&(i, j)| (i, j, 1.0))).unwrap();
        let (opt, p) = brute_force_optimum(&modularity_to_cp(&g, 1.0).unwrap()).unwrap();
        let mut best = f64::NEG_INFINITY;
        for_each_partition(n, |a| best = best.max(newman_modularity(n, &edges, a)));
        assert!((opt - best * 2.0 * edges.len() as f64).abs() < 1e-9);
        assert!((newman_modularity(n, &edges, p.assignment()) - best).abs() < 1e-12);
    }
}

#[test]
fn correlation_instance_uses_pearson() {
    let g = gen_correlation_instance::<f64>(6, 20, 9).unwrap();
    assert_eq!(g.edge_count(), 15);
    // Rebuild the same uniform matrix to cross-check each weight.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data: Vec<Vec<f64>> = (0..20).map(|_| (0..6).map(|_| rng.gen::<f64>()).collect()).collect();
    for (i, j, w) in g.pair_edges() {
        let x: Vec<f64> = data.iter().map(|r| r[i]).collect();
        let y: Vec<f64> = data.iter().map(|r| r[j]).collect();
        assert!((w - correlation_from_sums(&x, &y)).abs() < 1e-10);
    }
    assert!(gen_correlation_instance::<f64>(4, 2, 0).is_err());
}

#[test]
fn abr_csv_with_labels() {
    let text = "name,a,b,c\nx,1,0,1\ny,1,0,0\nz,0,1,0\n";
    let m = AttributeMatrix::from_csv(text.as_bytes(), true, true).unwrap();
    let g = abr_to_cp::<f64>(&m).unwrap();
    assert_eq!(g.weight(0, 1), 1.0);
    assert_eq!(g.weight(0, 2), -3.0);
    assert_eq!(g.weight(1, 2), -1.0);
    assert_eq!(g.label(2), "z");
}

/// Two blocks of assets driven by separate factors, with loadings that
/// vary from asset to asset.
fn two_block_returns(seed: u64, per_block: usize, periods: usize) -> ReturnsMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loading: Vec<f64> = (0..2 * per_block).map(|_| 3.0 * rng.gen_range(0.0..1.0f64).powi(3)).collect();
    let mut values = Vec::new();
    for _ in 0..periods {
        let f: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        values.push((0..2 * per_block).map(|a| loading[a] * f[a / per_block] + 0.5 * rng.gen_range(-1.0..1.0)).collect());
    }
    ReturnsMatrix::new(
        (0..2 * per_block).map(|a| format!("A{a}")).collect(),
        (0..periods).map(|t| t.to_string()).collect(),
        values,
    )
    .unwrap()
}

#[test]
fn portfolio_two_blocks_are_mostly_intra_block() {
    for seed in 0..20 {
        let r = two_block_returns(seed, 10, 120);
        let pg = fisher_portfolio_graph::<f64>(&r).unwrap();
        assert!(pg.graph.edge_count() > 0);
        let intra = pg.graph.pair_edges().filter(|&(i, j, _)| pg.id_map[i] / 10 == pg.id_map[j] / 10).count();
        assert!(intra as f64 >= 0.8 * pg.graph.edge_count() as f64, "seed {seed}: {intra}/{}", pg.graph.edge_count());
        for (i, j, w) in pg.graph.pair_edges() {
            let c = correlation_from_sums(&r.column(pg.id_map[i]), &r.column(pg.id_map[j]));
            assert!((w - c).abs() < 1e-10);
        }
    }
}

#[test]
fn portfolio_rejects_constant_asset() {
    let r = ReturnsMatrix::new(
        vec!["A".into(), "B".into()],
        vec!["1".into(), "2".into(), "3".into()],
        vec![vec![1.0, 0.1], vec![1.0, 0.2], vec![1.0, 0.4]],
    )
    .unwrap();
    assert!(fisher_portfolio_graph::<f64>(&r).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fisher_inverts_tanh(r in -0.999f64..0.999) {
        prop_assert!((fisher_z(r).tanh() - r).abs() < 1e-12);
        prop_assert!((fisher_z(r) - 0.5 * ((1.0 + r) / (1.0 - r)).ln()).abs() < 1e-9);
    }

    #[test]
    fn portfolio_keeps_no_isolated_nodes(seed in any::<u64>()) {
        let pg = fisher_portfolio_graph::<f64>(&two_block_returns(seed, 5, 30)).unwrap();
        for v in 0..pg.graph.node_count() {
            prop_assert!(pg.graph.arity(v) > 0);
        }
        prop_assert!(pg.id_map.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn abr_weights_have_parity_of_q(seed in any::<u64>(), q in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..5).map(|_| (0..q).map(|_| Some(rng.gen_range(0..3).to_string())).collect()).collect();
        let g = abr_to_cp::<f64>(&AttributeMatrix::new(cells).unwrap()).unwrap();
        for (_, _, w) in g.pair_edges() {
            prop_assert!(w.abs() <= q as f64);
            prop_assert_eq!((w as i64 - q as i64).rem_euclid(2), 0);
        }
    }

    #[test]
    fn ba_respects_small_ranges(seed in any::<u64>()) {
        let p = BaParams { nodes: (8, 12), attach: (1, 3), weights: (-2, 2) };
        let g = gen_ba_weighted::<f64>(p, seed).unwrap();
        prop_assert!((8..=12).contains(&g.node_count()));
        prop_assert_eq!(g.connected_components().len(), 1);
    }
}
