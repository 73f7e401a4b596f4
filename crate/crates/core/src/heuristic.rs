//! Primal heuristics: a Kernighan-Lin style cluster recombination search
//! and its two branch variants (weight perturbation and supernode merging).

use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartMode {
    #[default]
    Separate,
    Together,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Seeds a relabelling of the nodes, which changes tie-breaking. Seed 0
    /// keeps the original order.
    pub seed: u64,
    pub start_mode: StartMode,
    /// Passes over all cluster pairs before giving up.
    pub max_rounds: usize,
    /// Longest shift chain; `None` means the size of the two clusters.
    pub shift_chain_depth: Option<usize>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self { seed: 0, start_mode: StartMode::Separate, max_rounds: 100, shift_chain_depth: None }
    }
}

impl HeuristicConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// One accepted recombination. Cluster ids are positions in the working
/// cluster list at the time of the move; `target == None` opens a new one.
#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicMove<S> {
    pub source: usize,
    pub target: Option<usize>,
    pub moved: Vec<usize>,
    pub gain: S,
    pub objective: S,
}

#[derive(Clone, Debug)]
pub struct HeuristicRun<S> {
    pub partition: Partition,
    pub objective: S,
    pub start_objective: S,
    pub trace: Vec<HeuristicMove<S>>,
}

struct Search<S> {
    n: usize,
    w: Vec<S>,
    loops_total: S,
    cluster: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl<S: Scalar> Search<S> {
    fn new(g: &WeightedGraph<S>, perm: &[usize], mode: StartMode) -> Self {
        let n = g.node_count();
        // perm[new] = old
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut w = vec![S::zero(); n * n];
        for (i, j, x) in g.pair_edges() {
            let (a, b) = (inv[i], inv[j]);
            w[a * n + b] = x;
            w[b * n + a] = x;
        }
        let (cluster, members) = match mode {
            StartMode::Separate => ((0..n).collect(), (0..n).map(|v| vec![v]).collect()),
            StartMode::Together if n > 0 => (vec![0; n], vec![(0..n).collect()]),
            StartMode::Together => (Vec::new(), Vec::new()),
        };
        Self { n, w, loops_total: g.self_loop_total(), cluster, members }
    }

    fn objective(&self) -> S {
        let mut total = self.loops_total;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.cluster[i] == self.cluster[j] {
                    total = total + self.w[i * self.n + j];
                }
            }
        }
        total
    }

    fn connected(&self, a: usize, b: usize) -> bool {
        self.members[a].iter().any(|&u| self.members[b].iter().any(|&v| self.w[u * self.n + v] != S::zero()))
    }

    /// Best prefix of a shift chain between clusters `a` and `b` (or a new
    /// empty cluster). Nodes move at most once; the most profitable node
    /// moves next, lowest id on ties.
    fn chain(&self, a: usize, b: Option<usize>, depth: Option<usize>) -> Option<(S, Vec<usize>)> {
        let mut nodes: Vec<usize> = self.members[a].clone();
        if let Some(b) = b {
            nodes.extend(&self.members[b]);
        }
        nodes.sort_unstable();
        let k = nodes.len();
        // side: false = in a, true = in b
        let mut side: Vec<bool> = nodes.iter().map(|&v| self.cluster[v] != a).collect();
        // gain[i]: weight to the other side minus weight to own side.
        let mut gain = vec![S::zero(); k];
        for x in 0..k {
            for y in 0..k {
                if x != y {
                    let wxy = self.w[nodes[x] * self.n + nodes[y]];
                    gain[x] = if side[x] == side[y] { gain[x] - wxy } else { gain[x] + wxy };
                }
            }
        }
        let mut moved = vec![false; k];
        let limit = depth.unwrap_or(k).min(k);
        let tol = S::obj_tol();
        let mut cum = S::zero();
        let mut best: Option<(S, usize)> = None;
        let mut order = Vec::with_capacity(limit);
        for step in 0..limit {
            let mut pick: Option<usize> = None;
            for x in 0..k {
                if !moved[x] && pick.map_or(true, |p| gain[x] > gain[p] + tol) {
                    pick = Some(x);
                }
            }
            let Some(x) = pick else { break };
            cum = cum + gain[x];
            moved[x] = true;
            side[x] = !side[x];
            order.push(nodes[x]);
            for y in 0..k {
                if y != x {
                    let wxy = self.w[nodes[x] * self.n + nodes[y]];
                    let two = wxy + wxy;
                    // x just joined y's side if they now match.
                    gain[y] = if side[x] == side[y] { gain[y] - two } else { gain[y] + two };
                }
            }
            if cum > tol && best.map_or(true, |(g, _)| cum > g + tol) {
                best = Some((cum, step + 1));
            }
        }
        best.map(|(g, len)| {
            order.truncate(len);
            (g, order)
        })
    }

    fn apply(&mut self, a: usize, b: Option<usize>, moved: &[usize]) {
        let b = match b {
            Some(b) => b,
            None => {
                self.members.push(Vec::new());
                self.members.len() - 1
            }
        };
        for &v in moved {
            let to = if self.cluster[v] == a { b } else { a };
            self.cluster[v] = to;
        }
        for c in [a, b] {
            self.members[c] = (0..self.n).filter(|&v| self.cluster[v] == c).collect();
        }
        self.compact();
    }

    /// Drops empty clusters and renumbers by first member.
    fn compact(&mut self) {
        let mut order: Vec<usize> = (0..self.members.len()).filter(|&c| !self.members[c].is_empty()).collect();
        order.sort_by_key(|&c| self.members[c][0]);
        let mut remap = vec![usize::MAX; self.members.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        for c in self.cluster.iter_mut() {
            *c = remap[*c];
        }
        let mut members = vec![Vec::new(); order.len()];
        for (v, &c) in self.cluster.iter().enumerate() {
            members[c].push(v);
        }
        self.members = members;
    }

    fn run(&mut self, cfg: &HeuristicConfig) -> Vec<HeuristicMove<S>> {
        let mut trace = Vec::new();
        let mut objective = self.objective();
        for _ in 0..cfg.max_rounds {
            let k = self.members.len();
            let mut candidates: Vec<(S, usize, Option<usize>, Vec<usize>)> = Vec::new();
            for a in 0..k {
                for b in a + 1..k {
                    if self.connected(a, b) {
                        if let Some((g, moved)) = self.chain(a, Some(b), cfg.shift_chain_depth) {
                            candidates.push((g, a, Some(b), moved));
                        }
                    }
                }
                if self.members[a].len() > 1 {
                    if let Some((g, moved)) = self.chain(a, None, cfg.shift_chain_depth) {
                        candidates.push((g, a, None, moved));
                    }
                }
            }
            if candidates.is_empty() {
                break;
            }
            // Best gain first; ties by (source, target, first moved node).
            candidates.sort_by(|x, y| {
                y.0.partial_cmp(&x.0)
                    .unwrap()
                    .then(x.1.cmp(&y.1))
                    .then(x.2.map_or(usize::MAX, |t| t).cmp(&y.2.map_or(usize::MAX, |t| t)))
                    .then(x.3.cmp(&y.3))
            });
            // Apply non-overlapping moves in that order; the first one is
            // the globally best recombination.
            let mut touched = vec![false; k];
            let mut batch = Vec::new();
            for (g, a, b, moved) in candidates {
                if touched[a] || b.is_some_and(|b| touched[b]) {
                    continue;
                }
                touched[a] = true;
                if let Some(b) = b {
                    touched[b] = true;
                }
                batch.push((g, a, b, moved));
            }
            // Cluster ids shift on compaction, so resolve moves by node sets.
            let groups: Vec<(S, Vec<usize>, Option<Vec<usize>>, Vec<usize>)> = batch
                .into_iter()
                .map(|(g, a, b, moved)| (g, self.members[a].clone(), b.map(|b| self.members[b].clone()), moved))
                .collect();
            for (g, src, dst, moved) in groups {
                let a = self.cluster[src[0]];
                let b = dst.map(|d| self.cluster[d[0]]);
                self.apply(a, b, &moved);
                objective = objective + g;
                trace.push(HeuristicMove { source: a, target: b, moved, gain: g, objective });
            }
        }
        trace
    }
}

/// Runs the recombination search and returns the move trace alongside the
/// partition. Moved node ids in the trace refer to the input graph.
pub fn heuristic_run<S: Scalar>(g: &WeightedGraph<S>, cfg: &HeuristicConfig) -> HeuristicRun<S> {
    let n = g.node_count();
    let mut perm: Vec<usize> = (0..n).collect();
    if cfg.seed != 0 {
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    }
    let mut search = Search::new(g, &perm, cfg.start_mode);
    let start_objective = search.objective();
    let mut trace = search.run(cfg);
    for step in &mut trace {
        for v in step.moved.iter_mut() {
            *v = perm[*v];
        }
    }
    let mut assignment = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        assignment[old] = search.cluster[new];
    }
    let mut partition = Partition::from_assignment(&assignment);
    let mut objective = crate::graph::assignment_weight(g, partition.assignment());
    // Never return less than the two trivial baselines.
    for base in [Partition::singletons(n), Partition::together(n)] {
        let w = crate::graph::assignment_weight(g, base.assignment());
        if w > objective + S::obj_tol() {
            objective = w;
            partition = base;
        }
    }
    HeuristicRun { partition, objective, start_objective, trace }
}

pub fn heuristic_partition<S: Scalar>(g: &WeightedGraph<S>, cfg: &HeuristicConfig) -> Partition {
    heuristic_run(g, cfg).partition
}

/// Heuristic for the branch that keeps `i`, `j`, `k` apart: `delta` is
/// subtracted from every non-loop edge touching the triple before searching.
/// The partition is returned as-is; it may still group the triple.
pub fn heuristic_right_branch<S: Scalar>(
    g: &WeightedGraph<S>,
    triple: (usize, usize, usize),
    delta: S,
    cfg: &HeuristicConfig,
) -> Partition {
    if delta == S::zero() {
        return heuristic_partition(g, cfg);
    }
    let hit = |v: usize| v == triple.0 || v == triple.1 || v == triple.2;
    let perturbed = WeightedGraph::from_summed_edges(
        g.node_count(),
        g.edges().map(|(i, j, w)| if i != j && (hit(i) || hit(j)) { (i, j, w - delta) } else { (i, j, w) }),
    );
    heuristic_partition(&perturbed, cfg)
}

/// Contracts each set to one supernode. Returns the contracted graph and
/// the supernode of every original node. Supernodes come first, in the
/// order of `sets`; untouched nodes follow in increasing order.
pub fn contract<S: Scalar>(g: &WeightedGraph<S>, sets: &[Vec<usize>]) -> Result<(WeightedGraph<S>, Vec<usize>)> {
    let n = g.node_count();
    let mut map = vec![usize::MAX; n];
    for (s, set) in sets.iter().enumerate() {
        for &v in set {
            if v >= n {
                return Err(Error::NodeOutOfRange { id: v, n });
            }
            if map[v] != usize::MAX {
                return Err(Error::OverlappingSets(v));
            }
            map[v] = s;
        }
    }
    let mut next = sets.len();
    for m in map.iter_mut() {
        if *m == usize::MAX {
            *m = next;
            next += 1;
        }
    }
    let graph = WeightedGraph::from_summed_edges(next, g.edges().map(|(i, j, w)| (map[i], map[j], w)));
    Ok((graph, map))
}

/// Heuristic for the branch that merges each set: runs on the contracted
/// graph and expands, so every set lands inside one cluster.
pub fn heuristic_left_branch<S: Scalar>(
    g: &WeightedGraph<S>,
    merged_sets: &[Vec<usize>],
    cfg: &HeuristicConfig,
) -> Result<Partition> {
    if merged_sets.is_empty() {
        return Ok(heuristic_partition(g, cfg));
    }
    let (contracted, map) = contract(g, merged_sets)?;
    let p = heuristic_partition(&contracted, cfg);
    Ok(expand(&p, &map))
}

/// Lifts a partition of a contracted graph back to the original nodes.
pub fn expand(p: &Partition, map: &[usize]) -> Partition {
    let assignment: Vec<usize> = map.iter().map(|&s| p.cluster_of(s)).collect();
    Partition::from_assignment(&assignment)
}

/// Absolute median of the non-loop edge weights (mean of the two middle
/// values for an even count); zero without edges.
pub fn median_delta<S: Scalar>(g: &WeightedGraph<S>) -> S {
    let mut ws: Vec<S> = g.pair_edges().map(|(_, _, w)| w).collect();
    if ws.is_empty() {
        return S::zero();
    }
    ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = ws.len();
    let med = if m % 2 == 1 { ws[m / 2] } else { (ws[m / 2 - 1] + ws[m / 2]) / S::of(2.0) };
    med.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::partition_weight;

    fn g(n: usize, e: &[(usize, usize, f64)]) -> WeightedGraph<f64> {
        WeightedGraph::from_edges(n, e.iter().copied()).unwrap()
    }

    #[test]
    fn all_positive_goes_together() {
        let graph = g(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0)]);
        let p = heuristic_partition(&graph, &HeuristicConfig::default());
        assert_eq!(p.cluster_count(), 1);
    }

    #[test]
    fn all_negative_stays_apart() {
        let graph = g(3, &[(0, 1, -1.0), (1, 2, -1.0), (0, 2, -1.0), (0, 0, 2.0)]);
        let run = heuristic_run(&graph, &HeuristicConfig { start_mode: StartMode::Together, ..Default::default() });
        assert_eq!(run.partition.cluster_count(), 3);
        assert_eq!(run.objective, 2.0);
    }

    #[test]
    fn chain_splits_a_bad_cluster() {
        // Two positive pairs joined by strong negative ties, started together.
        let graph = g(4, &[(0, 1, 3.0), (2, 3, 3.0), (0, 2, -5.0), (1, 3, -5.0), (0, 3, -1.0), (1, 2, -1.0)]);
        let cfg = HeuristicConfig { start_mode: StartMode::Together, ..Default::default() };
        let run = heuristic_run(&graph, &cfg);
        assert_eq!(run.objective, 6.0);
        assert!(run.partition.same_cluster(0, 1) && !run.partition.same_cluster(0, 2));
    }

    #[test]
    fn right_branch_delta_separates_positive_triangle() {
        let graph = g(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        let p = heuristic_right_branch(&graph, (0, 1, 2), 10.0, &HeuristicConfig::default());
        assert_eq!(p.cluster_count(), 3);
        assert_eq!(partition_weight(&graph, &p).unwrap(), 0.0);
    }

    #[test]
    fn contraction_makes_loop() {
        let graph = g(4, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, -4.0)]);
        let (c, map) = contract(&graph, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(c.node_count(), 2);
        assert_eq!(c.self_loop(0), 3.0);
        assert_eq!(c.weight(0, 1), -4.0);
        assert_eq!(map, vec![0, 0, 0, 1]);
        let p = heuristic_left_branch(&graph, &[vec![0, 1, 2]], &HeuristicConfig::default()).unwrap();
        assert!(p.same_cluster(0, 1) && p.same_cluster(1, 2) && !p.same_cluster(0, 3));
    }

    #[test]
    fn overlapping_merge_sets_rejected() {
        let graph = g(3, &[(0, 1, 1.0)]);
        assert!(matches!(
            heuristic_left_branch(&graph, &[vec![0, 1], vec![1, 2]], &HeuristicConfig::default()),
            Err(Error::OverlappingSets(1))
        ));
    }

    #[test]
    fn median_examples() {
        let m = |ws: &[f64]| {
            let e: Vec<_> = ws.iter().enumerate().map(|(k, &w)| (0, k + 1, w)).collect();
            median_delta(&g(ws.len() + 1, &e))
        };
        assert_eq!(m(&[-3.0, 1.0, 5.0]), 1.0);
        assert_eq!(m(&[-4.0, -2.0, 2.0, 4.0]), 0.0);
        assert_eq!(m(&[-5.0, -3.0, -1.0]), 3.0);
        assert_eq!(median_delta(&WeightedGraph::<f64>::empty(3)), 0.0);
    }
}
