//! Weighted signed graphs, node partitions and the clique-partitioning
//! objective.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Undirected graph with real, nonzero edge weights and optional self-loops.
///
/// Non-loop edges are kept in sorted adjacency lists so pair lookups are a
/// binary search; self-loops live in a separate per-node array.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph<S> {
    adjacency: Vec<Vec<(usize, S)>>,
    loops: Vec<S>,
    edge_count: usize,
    labels: Option<Vec<String>>,
}

impl<S: Scalar> WeightedGraph<S> {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            loops: vec![S::zero(); n],
            edge_count: 0,
            labels: None,
        }
    }

    /// Builds a graph from `(i, j, w)` triples. Each unordered pair may appear
    /// at most once and every weight must be nonzero.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        let mut g = Self::empty(n);
        for (i, j, w) in edges {
            g.insert_edge(i, j, w)?;
        }
        g.sort_adjacency();
        Ok(g)
    }

    fn insert_edge(&mut self, i: usize, j: usize, w: S) -> Result<()> {
        let n = self.node_count();
        for id in [i, j] {
            if id >= n {
                return Err(Error::NodeOutOfRange { id, n });
            }
        }
        if w == S::zero() || !w.is_finite() {
            return Err(Error::ZeroWeight(i.to_string(), j.to_string()));
        }
        if i == j {
            if self.loops[i] != S::zero() {
                return Err(Error::DuplicateEdge(i.to_string(), j.to_string()));
            }
            self.loops[i] = w;
        } else {
            if self.adjacency[i].iter().any(|&(v, _)| v == j) {
                return Err(Error::DuplicateEdge(i.to_string(), j.to_string()));
            }
            self.adjacency[i].push((j, w));
            self.adjacency[j].push((i, w));
        }
        self.edge_count += 1;
        Ok(())
    }

    fn sort_adjacency(&mut self) {
        for adj in &mut self.adjacency {
            adj.sort_by_key(|&(v, _)| v);
        }
    }

    /// Builds a graph by summing weights per pair; pairs summing to zero are
    /// dropped. Used for contractions, where parallel edges are expected.
    pub fn from_summed_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        let mut acc: std::collections::BTreeMap<(usize, usize), S> = Default::default();
        for (i, j, w) in edges {
            let key = (i.min(j), i.max(j));
            let e = acc.entry(key).or_insert_with(S::zero);
            *e = *e + w;
        }
        let mut g = Self::empty(n);
        for ((i, j), w) in acc {
            if w != S::zero() {
                g.insert_edge(i, j, w).expect("summed pairs are unique and in range");
            }
        }
        g.sort_adjacency();
        g
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.node_count(), "one label per node");
        self.labels = Some(labels);
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Original identifier of node `i`, or its index when no labels are set.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.loops.len()
    }

    /// Number of edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Weight of the pair `(i, j)`, zero when absent. `i == j` gives the loop.
    pub fn weight(&self, i: usize, j: usize) -> S {
        if i == j {
            return self.loops[i];
        }
        let adj = &self.adjacency[i];
        match adj.binary_search_by_key(&j, |&(v, _)| v) {
            Ok(pos) => adj[pos].1,
            Err(_) => S::zero(),
        }
    }

    /// Non-loop neighbours of `i`, sorted by id.
    pub fn neighbors(&self, i: usize) -> &[(usize, S)] {
        &self.adjacency[i]
    }

    pub fn self_loop(&self, i: usize) -> S {
        self.loops[i]
    }

    /// All edges as `(i, j, w)` with `i <= j`, loops included, in
    /// lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(i, adj)| {
            let lp = self.loops[i];
            let loop_edge = (lp != S::zero()).then_some((i, i, lp));
            loop_edge
                .into_iter()
                .chain(adj.iter().filter(move |&&(j, _)| j > i).map(move |&(j, w)| (i, j, w)))
        })
    }

    /// Non-loop edges only.
    pub fn pair_edges(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        self.edges().filter(|&(i, j, _)| i != j)
    }

    /// Weighted degree, self-loop counted once.
    pub fn degree(&self, i: usize) -> Result<S> {
        if i >= self.node_count() {
            return Err(Error::NodeOutOfRange { id: i, n: self.node_count() });
        }
        Ok(self.degree_unchecked(i))
    }

    pub(crate) fn degree_unchecked(&self, i: usize) -> S {
        self.adjacency[i].iter().map(|&(_, w)| w).fold(self.loops[i], |a, b| a + b)
    }

    /// Number of non-loop incident edges.
    pub fn arity(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn self_loop_total(&self) -> S {
        self.loops.iter().copied().sum()
    }

    /// Sum of positive non-loop weights.
    pub fn positive_total(&self) -> S {
        self.pair_edges().map(|(_, _, w)| w).filter(|w| *w > S::zero()).sum()
    }

    /// `positive_total + self_loop_total`: the objective if every positive
    /// edge could be internal and every negative one external.
    pub fn trivial_upper_bound(&self) -> S {
        self.positive_total() + self.self_loop_total()
    }

    pub fn has_negative_edge(&self) -> bool {
        self.pair_edges().any(|(_, _, w)| w < S::zero())
    }

    /// Connected components of the unsigned structure. Each component is
    /// sorted; components are ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Subgraph induced by `nodes` (in the given order). Labels carry over.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.node_count()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut g = Self::empty(nodes.len());
        for (k, &v) in nodes.iter().enumerate() {
            g.loops[k] = self.loops[v];
            if self.loops[v] != S::zero() {
                g.edge_count += 1;
            }
            for &(u, w) in &self.adjacency[v] {
                let lu = local[u];
                if lu != usize::MAX {
                    g.adjacency[k].push((lu, w));
                    if lu > k {
                        g.edge_count += 1;
                    }
                }
            }
        }
        g.sort_adjacency();
        if let Some(labels) = &self.labels {
            g.labels = Some(nodes.iter().map(|&v| labels[v].clone()).collect());
        }
        g
    }

    /// Same structure with weights mapped through `f`; pairs mapped to zero
    /// are dropped.
    pub fn map_weights(&self, mut f: impl FnMut(usize, usize, S) -> S) -> Self {
        let edges: Vec<_> = self.edges().map(|(i, j, w)| (i, j, f(i, j, w))).collect();
        let mut g = Self::from_summed_edges(self.node_count(), edges);
        g.labels = self.labels.clone();
        g
    }

    /// Converts weights to another scalar type.
    pub fn cast<T: Scalar>(&self) -> WeightedGraph<T> {
        let edges = self.edges().map(|(i, j, w)| (i, j, T::of(w.as_f64())));
        let mut g = WeightedGraph::<T>::from_summed_edges(self.node_count(), edges);
        g.labels = self.labels.clone();
        g
    }
}

/// Assignment of nodes to disjoint clusters, kept in canonical form: cluster
/// ids are `0..k` in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    cluster_count: usize,
}

impl Partition {
    /// Canonicalises an arbitrary labelling.
    pub fn from_assignment(raw: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let assignment: Vec<usize> = raw
            .iter()
            .map(|c| {
                let next = remap.len();
                *remap.entry(*c).or_insert(next)
            })
            .collect();
        Self { assignment, cluster_count: remap.len() }
    }

    /// Builds a partition of `n` nodes from explicit clusters. Nodes not
    /// mentioned become singletons.
    pub fn from_clusters(n: usize, clusters: &[Vec<usize>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &v in members {
                if v >= n {
                    return Err(Error::NodeOutOfRange { id: v, n });
                }
                if raw[v] != usize::MAX {
                    return Err(Error::OverlappingSets(v));
                }
                raw[v] = c;
            }
        }
        let mut next = clusters.len();
        for slot in raw.iter_mut().filter(|s| **s == usize::MAX) {
            *slot = next;
            next += 1;
        }
        Ok(Self::from_assignment(&raw))
    }

    pub fn singletons(n: usize) -> Self {
        Self { assignment: (0..n).collect(), cluster_count: n }
    }

    pub fn together(n: usize) -> Self {
        Self { assignment: vec![0; n], cluster_count: usize::from(n > 0) }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.assignment[i] == self.assignment[j]
    }

    /// Clusters as sorted member lists, indexed by cluster id.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// Sum of within-cluster edge weights; self-loops always count.
pub fn partition_weight<S: Scalar>(g: &WeightedGraph<S>, p: &Partition) -> Result<S> {
    if p.len() != g.node_count() {
        return Err(Error::LengthMismatch { expected: g.node_count(), got: p.len() });
    }
    Ok(assignment_weight(g, p.assignment()))
}

pub(crate) fn assignment_weight<S: Scalar>(g: &WeightedGraph<S>, assignment: &[usize]) -> S {
    g.edges()
        .filter(|&(i, j, _)| assignment[i] == assignment[j])
        .map(|(_, _, w)| w)
        .sum()
}
