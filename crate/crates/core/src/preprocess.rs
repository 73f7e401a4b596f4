//! Size reductions applied before any model is built: splitting into
//! connected components and collapsing pendant nodes and pendant cliques
//! into self-loops. Every reduction is logged so a partition of the reduced
//! graph can be lifted back to the original node set.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::scalar::Scalar;

/// One connected component with the map from its local ids to the parent's.
#[derive(Clone, Debug)]
pub struct Component<S> {
    pub graph: WeightedGraph<S>,
    pub id_map: Vec<usize>,
}

pub fn decompose_components<S: Scalar>(g: &WeightedGraph<S>) -> Vec<Component<S>> {
    g.connected_components()
        .into_iter()
        .map(|nodes| Component { graph: g.induced_subgraph(&nodes), id_map: nodes })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReductionStep<S> {
    /// Degree-one node. Positive edges fold into a self-loop on the
    /// neighbour; negative ones leave the pendant as its own cluster.
    PendantNode { pendant: usize, neighbor: usize, w: S, kept_separate: bool },
    /// Positive clique attached through a single connector. `internal_weight`
    /// is everything moved onto the connector's loop: clique edges plus the
    /// loops of the absorbed members.
    PendantClique { members: Vec<usize>, connector: usize, internal_weight: S },
}

/// Replayable record of [`reduce_pendants`]. Node ids inside `steps` refer
/// to the input graph; `id_map[r]` is the input id of reduced node `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionLog<S> {
    pub steps: Vec<ReductionStep<S>>,
    pub id_map: Vec<usize>,
    pub original_nodes: usize,
}

impl<S: Scalar> ReductionLog<S> {
    pub fn identity(n: usize) -> Self {
        Self { steps: Vec::new(), id_map: (0..n).collect(), original_nodes: n }
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }
}

struct Workspace<S> {
    adj: Vec<BTreeMap<usize, S>>,
    loops: Vec<S>,
    alive: Vec<bool>,
}

impl<S: Scalar> Workspace<S> {
    fn new(g: &WeightedGraph<S>) -> Self {
        let n = g.node_count();
        Self {
            adj: (0..n).map(|i| g.neighbors(i).iter().copied().collect()).collect(),
            loops: (0..n).map(|i| g.self_loop(i)).collect(),
            alive: vec![true; n],
        }
    }

    fn remove(&mut self, v: usize) {
        let nbrs: Vec<usize> = self.adj[v].keys().copied().collect();
        for u in nbrs {
            self.adj[u].remove(&v);
        }
        self.adj[v].clear();
        self.alive[v] = false;
    }

    /// Reduces every pendant node it can; returns whether anything changed.
    fn pendant_nodes(&mut self, steps: &mut Vec<ReductionStep<S>>) -> bool {
        let mut changed = false;
        let mut queue: Vec<usize> = (0..self.alive.len()).rev().collect();
        while let Some(v) = queue.pop() {
            if !self.alive[v] || self.adj[v].len() != 1 {
                continue;
            }
            let (&u, &w) = self.adj[v].iter().next().unwrap();
            if w > S::zero() {
                self.loops[u] = self.loops[u] + w + self.loops[v];
                steps.push(ReductionStep::PendantNode { pendant: v, neighbor: u, w, kept_separate: false });
            } else if self.loops[v] == S::zero() {
                steps.push(ReductionStep::PendantNode { pendant: v, neighbor: u, w, kept_separate: true });
            } else {
                // A separated pendant would drop its own loop from the reduced objective.
                continue;
            }
            self.remove(v);
            changed = true;
            if self.adj[u].len() == 1 {
                queue.push(u);
            }
        }
        changed
    }

    /// Collapses the smallest pendant clique found, if any.
    fn one_pendant_clique(&mut self, steps: &mut Vec<ReductionStep<S>>) -> bool {
        let mut best: Option<(usize, Vec<usize>, usize)> = None;
        for v in 0..self.alive.len() {
            if !self.alive[v] || self.adj[v].len() < 2 {
                continue;
            }
            let size = self.adj[v].len() + 1;
            if best.as_ref().is_some_and(|(s, _, _)| *s <= size) {
                continue;
            }
            if let Some((members, connector)) = self.pendant_clique_at(v) {
                best = Some((size, members, connector));
            }
        }
        let Some((_, members, connector)) = best else {
            return false;
        };
        let mut internal = S::zero();
        for (a, &x) in members.iter().enumerate() {
            for &y in &members[a + 1..] {
                internal = internal + self.adj[x][&y];
            }
            if x != connector {
                internal = internal + self.loops[x];
            }
        }
        self.loops[connector] = self.loops[connector] + internal;
        for &x in members.iter().filter(|&&x| x != connector) {
            self.remove(x);
        }
        steps.push(ReductionStep::PendantClique { members, connector, internal_weight: internal });
        true
    }

    /// Treats `v` (no external edges) as a clique member and checks whether
    /// `{v} ∪ N(v)` is a positive pendant clique.
    fn pendant_clique_at(&self, v: usize) -> Option<(Vec<usize>, usize)> {
        let s = self.adj[v].len() + 1;
        if self.adj[v].values().any(|w| *w <= S::zero()) {
            return None;
        }
        let mut members: Vec<usize> = self.adj[v].keys().copied().collect();
        members.push(v);
        members.sort_unstable();
        let mut connector = None;
        for &x in &members {
            let internal = members
                .iter()
                .filter(|&&y| y != x)
                .all(|y| self.adj[x].get(y).is_some_and(|w| *w > S::zero()));
            if !internal {
                return None;
            }
            match self.adj[x].len() {
                d if d == s - 1 => {}
                d if d == s && connector.is_none() => connector = Some(x),
                _ => return None,
            }
        }
        connector.map(|c| (members, c))
    }
}

/// Applies pendant node and pendant clique reductions to a fixpoint. The
/// optimal value of the reduced graph equals that of the input.
pub fn reduce_pendants<S: Scalar>(g: &WeightedGraph<S>) -> (WeightedGraph<S>, ReductionLog<S>) {
    let mut ws = Workspace::new(g);
    let mut steps = Vec::new();
    loop {
        ws.pendant_nodes(&mut steps);
        if !ws.one_pendant_clique(&mut steps) {
            break;
        }
    }
    if steps.is_empty() {
        return (g.clone(), ReductionLog::identity(g.node_count()));
    }

    let id_map: Vec<usize> = (0..g.node_count()).filter(|&v| ws.alive[v]).collect();
    let mut local = vec![usize::MAX; g.node_count()];
    for (r, &v) in id_map.iter().enumerate() {
        local[v] = r;
    }
    let mut edges = Vec::new();
    for &v in &id_map {
        if ws.loops[v] != S::zero() {
            edges.push((local[v], local[v], ws.loops[v]));
        }
        for (&u, &w) in &ws.adj[v] {
            if u > v {
                edges.push((local[v], local[u], w));
            }
        }
    }
    let mut reduced = WeightedGraph::from_summed_edges(id_map.len(), edges);
    if let Some(labels) = g.labels() {
        reduced = reduced.with_labels(id_map.iter().map(|&v| labels[v].clone()).collect());
    }
    let log = ReductionLog { steps, id_map, original_nodes: g.node_count() };
    (reduced, log)
}

/// Inverse of [`reduce_pendants`] on partitions.
pub fn lift_partition<S: Scalar>(log: &ReductionLog<S>, reduced: &Partition) -> Result<Partition> {
    if reduced.len() != log.id_map.len() {
        return Err(Error::LengthMismatch { expected: log.id_map.len(), got: reduced.len() });
    }
    let mut assign = vec![usize::MAX; log.original_nodes];
    for (r, &v) in log.id_map.iter().enumerate() {
        assign[v] = reduced.cluster_of(r);
    }
    let mut next = reduced.cluster_count();
    for step in log.steps.iter().rev() {
        match step {
            ReductionStep::PendantNode { pendant, neighbor, kept_separate, .. } => {
                if *kept_separate {
                    assign[*pendant] = next;
                    next += 1;
                } else {
                    assign[*pendant] = assign[*neighbor];
                }
            }
            ReductionStep::PendantClique { members, connector, .. } => {
                for &m in members {
                    assign[m] = assign[*connector];
                }
            }
        }
    }
    if let Some(v) = assign.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Inconsistent(format!("node {v} not covered by reduction log")));
    }
    Ok(Partition::from_assignment(&assign))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::partition_weight;

    fn g(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph<f64> {
        WeightedGraph::from_edges(n, edges.iter().copied()).unwrap()
    }

    #[test]
    fn components_of_two_triangles() {
        let t = g(6, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, -1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 2.0)]);
        let comps = decompose_components(&t);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[1].id_map, vec![3, 4, 5]);
        assert_eq!(comps[1].graph.weight(0, 2), 2.0);
    }

    #[test]
    fn isolated_nodes_become_singleton_components() {
        let comps = decompose_components(&WeightedGraph::<f64>::empty(5));
        assert_eq!(comps.len(), 5);
        assert!(comps.iter().all(|c| c.graph.node_count() == 1));
    }

    #[test]
    fn connected_graph_is_one_component() {
        let t = g(3, &[(0, 1, 1.0), (1, 2, -1.0)]);
        let comps = decompose_components(&t);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].graph, t);
    }

    /// Node 4 hangs off node 0 of a small frustrated core.
    fn pendant_example() -> WeightedGraph<f64> {
        g(5, &[(0, 1, 2.0), (1, 2, -1.0), (0, 2, 1.0), (2, 3, 3.0), (0, 3, -2.0), (1, 3, 1.0), (0, 4, 2.5)])
    }

    #[test]
    fn positive_pendant_becomes_self_loop() {
        let (red, log) = reduce_pendants(&pendant_example());
        assert_eq!(red.node_count(), 4);
        assert_eq!(red.self_loop(0), 2.5);
        assert_eq!(
            log.steps,
            vec![ReductionStep::PendantNode { pendant: 4, neighbor: 0, w: 2.5, kept_separate: false }]
        );
        let lifted = lift_partition(&log, &Partition::singletons(4)).unwrap();
        assert!(lifted.same_cluster(0, 4));
    }

    #[test]
    fn negative_pendant_kept_separate() {
        let t = g(4, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, -1.0), (2, 3, -3.0)]);
        let (red, log) = reduce_pendants(&t);
        assert_eq!(red.node_count(), 3);
        assert_eq!(red.self_loop_total(), 0.0);
        assert!(matches!(
            log.steps[0],
            ReductionStep::PendantNode { pendant: 3, kept_separate: true, .. }
        ));
        let lifted = lift_partition(&log, &Partition::together(3)).unwrap();
        assert!(!lifted.same_cluster(2, 3));
    }

    #[test]
    fn pendant_cliques_collapse_onto_connectors() {
        // Two positive triangles joined through a hub node 6.
        let t = g(
            7,
            &[
                (0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0),
                (3, 4, 4.0), (3, 5, 5.0), (4, 5, 6.0),
                (0, 6, -1.0), (5, 6, 2.0),
            ],
        );
        let (red, log) = reduce_pendants(&t);
        assert_eq!(
            log.steps[0],
            ReductionStep::PendantClique { members: vec![0, 1, 2], connector: 0, internal_weight: 6.0 }
        );
        // Node 5 then dangles off the hub and folds into it; node 0 keeps its
        // loop because its only edge is negative.
        assert_eq!(red.node_count(), 2);
        assert_eq!(red.self_loop(0), 6.0);
        assert_eq!(red.self_loop(1), 17.0);
        let cliques: Vec<_> = log
            .steps
            .iter()
            .filter_map(|s| match s {
                ReductionStep::PendantClique { connector, internal_weight, .. } => {
                    Some((*connector, *internal_weight))
                }
                _ => None,
            })
            .collect();
        assert_eq!(cliques, vec![(0, 6.0), (5, 15.0)]);
    }

    #[test]
    fn lift_preserves_objective() {
        let t = pendant_example();
        let (red, log) = reduce_pendants(&t);
        crate::oracle::for_each_partition(red.node_count(), |a| {
            let p = Partition::from_assignment(a);
            let lifted = lift_partition(&log, &p).unwrap();
            assert_eq!(partition_weight(&t, &lifted).unwrap(), partition_weight(&red, &p).unwrap());
        });
    }

    #[test]
    fn reduction_is_idempotent() {
        let (red, _) = reduce_pendants(&pendant_example());
        let (again, log) = reduce_pendants(&red);
        assert_eq!(again, red);
        assert!(log.is_identity());
    }

    #[test]
    fn empty_log_lifts_identically() {
        let log = ReductionLog::<f64>::identity(3);
        let p = Partition::from_assignment(&[0, 1, 0]);
        assert_eq!(lift_partition(&log, &p).unwrap(), p);
        assert!(lift_partition(&log, &Partition::singletons(2)).is_err());
    }
}
