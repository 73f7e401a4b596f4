use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::lp::{Basis, BasicVar, LpSolution, LpStatus};
use crate::model::{Cut, Pair, Triple, TripleSets};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// All three pairs together (or the pair together).
    Left,
    /// At most one pair together (or the pair apart).
    Right,
}

/// What a node branched on. Pair branching is only used when no triple
/// separates the current relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Triple(Triple, Side),
    Pair(Pair, Side),
}

impl Decision {
    pub fn side(&self) -> Side {
        match *self {
            Decision::Triple(_, s) | Decision::Pair(_, s) => s,
        }
    }

    fn nodes(&self) -> Vec<usize> {
        match *self {
            Decision::Triple(t, _) => t.nodes().to_vec(),
            Decision::Pair(p, _) => vec![p.lo, p.hi],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FathomReason {
    IntegralLp,
    InfeasibleLp,
    BoundDominated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeStatus {
    Open,
    Fathomed(FathomReason),
}

#[derive(Clone, Debug)]
pub struct SearchNode<S> {
    pub depth: usize,
    pub branch_history: Vec<Decision>,
    /// `true` fixes the pair apart (x = 1), `false` together (x = 0).
    pub fixed_vars: BTreeMap<Pair, bool>,
    /// LP rows in insertion order: separated pool constraints plus the
    /// branch and implied at-least-two cuts. Children extend this list.
    pub cuts: Vec<Cut>,
    /// Node sets forced together by left branches, disjoint and sorted.
    pub merged_sets: Vec<Vec<usize>>,
    pub lp_bound: Option<S>,
    /// Bound inherited from the parent; the node bound never exceeds it.
    pub parent_bound: S,
    pub heuristic_value: Option<S>,
    pub heuristic_partition: Option<Partition>,
    pub status: NodeStatus,
    pub basis: Option<Basis>,
}

impl<S: Scalar> SearchNode<S> {
    pub fn root(parent_bound: S) -> Self {
        Self {
            depth: 0,
            branch_history: Vec::new(),
            fixed_vars: BTreeMap::new(),
            cuts: Vec::new(),
            merged_sets: Vec::new(),
            lp_bound: None,
            parent_bound,
            heuristic_value: None,
            heuristic_partition: None,
            status: NodeStatus::Open,
            basis: None,
        }
    }

    /// Triples carrying an at-least-two cut at this node.
    pub fn local_cuts(&self) -> impl Iterator<Item = Triple> + '_ {
        self.cuts.iter().filter_map(|c| match c {
            Cut::AtLeastTwo(t) => Some(*t),
            _ => None,
        })
    }

    pub fn fixed(&self, p: Pair) -> Option<bool> {
        self.fixed_vars.get(&p).copied()
    }

    /// Best known bound for the node.
    pub fn bound(&self) -> S {
        self.lp_bound.unwrap_or(self.parent_bound)
    }

    fn infeasible(&mut self) {
        self.status = NodeStatus::Fathomed(FathomReason::InfeasibleLp);
    }

    /// Records a fixing; a clash with an existing one makes the node
    /// infeasible. Returns whether anything new was fixed.
    pub fn fix(&mut self, p: Pair, separate: bool) -> bool {
        match self.fixed_vars.get(&p) {
            Some(&v) if v == separate => false,
            Some(_) => {
                self.infeasible();
                false
            }
            None => {
                self.fixed_vars.insert(p, separate);
                true
            }
        }
    }

    fn add_local_cut(&mut self, t: Triple) -> bool {
        let cut = Cut::AtLeastTwo(t);
        if self.cuts.contains(&cut) {
            return false;
        }
        self.cuts.push(cut);
        true
    }

    fn merge(&mut self, nodes: &[usize]) {
        let mut merged: BTreeSet<usize> = nodes.iter().copied().collect();
        self.merged_sets.retain(|s| {
            if s.iter().any(|v| merged.contains(v)) {
                merged.extend(s);
                false
            } else {
                true
            }
        });
        self.merged_sets.push(merged.into_iter().collect());
        self.merged_sets.sort();
    }

    /// Whether every pair of `t` is fixed.
    pub fn decided(&self, t: Triple) -> bool {
        t.pairs().iter().all(|p| self.fixed_vars.contains_key(p))
    }

    fn child(&self, decision: Decision) -> Self {
        let mut c = self.clone();
        c.depth += 1;
        c.branch_history.push(decision);
        c.lp_bound = None;
        c.parent_bound = self.bound();
        c.heuristic_value = None;
        c.heuristic_partition = None;
        c.status = NodeStatus::Open;
        c
    }
}

/// Which propagation rules run after fixings or cuts change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationRules {
    pub logical: bool,
    pub implied_cuts: bool,
}

impl Default for PropagationRules {
    fn default() -> Self {
        Self { logical: true, implied_cuts: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PropagationCounts {
    pub fixings: usize,
    pub cuts: usize,
}

/// Splits `node` on triple `t`: the left child puts all three nodes in one
/// cluster, the right child adds `x_ij + x_ik + x_jk >= 2`. Both children
/// are propagated with `rules`.
pub fn branch<S: Scalar>(
    node: &SearchNode<S>,
    t: Triple,
    rules: PropagationRules,
) -> Result<(SearchNode<S>, SearchNode<S>)> {
    if node.decided(t) {
        return Err(Error::InvalidBranch(format!("triple {t:?} is already decided")));
    }
    let mut left = node.child(Decision::Triple(t, Side::Left));
    for p in t.pairs() {
        left.fix(p, false);
    }
    left.merge(&t.nodes());
    let mut right = node.child(Decision::Triple(t, Side::Right));
    right.add_local_cut(t);
    propagate_logical(&mut left, rules);
    propagate_logical(&mut right, rules);
    Ok((left, right))
}

/// Fallback split on a single pair: together on the left, apart on the
/// right.
pub fn branch_pair<S: Scalar>(
    node: &SearchNode<S>,
    p: Pair,
    rules: PropagationRules,
) -> Result<(SearchNode<S>, SearchNode<S>)> {
    if node.fixed_vars.contains_key(&p) {
        return Err(Error::InvalidBranch(format!("pair {p:?} is already fixed")));
    }
    let mut left = node.child(Decision::Pair(p, Side::Left));
    left.fix(p, false);
    left.merge(&[p.lo, p.hi]);
    let mut right = node.child(Decision::Pair(p, Side::Right));
    right.fix(p, true);
    propagate_logical(&mut left, rules);
    propagate_logical(&mut right, rules);
    Ok((left, right))
}

/// The node's LP relaxation: which pair each column stands for, and the
/// solution.
#[derive(Clone, Debug)]
pub struct NodeRelaxation<S> {
    pub columns: Vec<Pair>,
    pub solution: LpSolution<S>,
}

/// Reduced-cost fixing against the lower bound `incumbent`. A column at 0
/// with reduced cost `c < 0` is fixed to 0 when `z + c <= LB`; a column at 1
/// with `c > 0` is fixed to 1 when `z - c <= LB`. Both tests carry a small
/// slack so rounding can only suppress a fixing.
pub fn fix_by_reduced_cost<S: Scalar>(node: &mut SearchNode<S>, relax: &NodeRelaxation<S>, incumbent: S) -> usize {
    let sol = &relax.solution;
    if sol.status != LpStatus::Optimal {
        return 0;
    }
    let z = sol.objective;
    let slack = S::of(1e-9);
    let basic: HashSet<usize> = sol
        .basis
        .basic
        .iter()
        .filter_map(|b| match b {
            BasicVar::Col(j) => Some(*j),
            _ => None,
        })
        .collect();
    let mut count = 0;
    for (j, &p) in relax.columns.iter().enumerate() {
        if basic.contains(&j) || node.fixed_vars.contains_key(&p) {
            continue;
        }
        let c = sol.reduced_costs[j];
        let x = sol.primal[j];
        if x <= S::int_tol() && c < -S::opt_tol() && z + c + slack <= incumbent {
            node.fix(p, false);
            count += 1;
        } else if x >= S::one() - S::int_tol() && c > S::opt_tol() && z - c + slack <= incumbent {
            node.fix(p, true);
            count += 1;
        }
    }
    count
}

/// Closes the node's fixings and cuts under the logical rules, to a
/// fixpoint:
///
/// * together-fixings are closed transitively, and an apart-fixing between
///   two together-classes spreads to every pair across them (this also
///   covers the left-branch rules, whose triples form one class);
/// * an at-least-two cut with one pair together forces the other two apart,
///   and one with two pairs together is infeasible;
/// * an at-least-two cut on `(i, j, k)` with `x_ip = 0` implies the cut on
///   `(p, j, k)`.
///
/// Contradictions mark the node infeasible.
pub fn propagate_logical<S: Scalar>(node: &mut SearchNode<S>, rules: PropagationRules) -> PropagationCounts {
    let mut counts = PropagationCounts::default();
    loop {
        let mut changed = false;
        if rules.logical {
            let n = node.fixed_vars.keys().map(|p| p.hi + 1).max().unwrap_or(0).max(
                node.local_cuts().map(|t| t.2 + 1).max().unwrap_or(0),
            );
            let mut dsu = DisjointSets::new(n);
            for (p, &sep) in &node.fixed_vars {
                if !sep {
                    dsu.union(p.lo, p.hi);
                }
            }
            let roots = dsu.roots();
            let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (v, &r) in roots.iter().enumerate() {
                classes.entry(r).or_default().push(v);
            }
            let mut new: Vec<(Pair, bool)> = Vec::new();
            for members in classes.values().filter(|m| m.len() > 1) {
                for (a, &u) in members.iter().enumerate() {
                    for &v in &members[a + 1..] {
                        new.push((Pair::new(u, v), false));
                    }
                }
            }
            for (p, &sep) in &node.fixed_vars {
                if sep {
                    let (ra, rb) = (roots[p.lo], roots[p.hi]);
                    if ra == rb {
                        node.status = NodeStatus::Fathomed(FathomReason::InfeasibleLp);
                        return counts;
                    }
                    for &u in &classes[&ra] {
                        for &v in &classes[&rb] {
                            new.push((Pair::new(u, v), true));
                        }
                    }
                }
            }
            for t in node.local_cuts().collect::<Vec<_>>() {
                let together: Vec<Pair> = t.pairs().into_iter().filter(|p| node.fixed(*p) == Some(false)).collect();
                match together.len() {
                    0 => {}
                    1 => {
                        for p in t.pairs() {
                            if p != together[0] {
                                new.push((p, true));
                            }
                        }
                    }
                    _ => {
                        node.status = NodeStatus::Fathomed(FathomReason::InfeasibleLp);
                        return counts;
                    }
                }
            }
            for (p, sep) in new {
                if node.fix(p, sep) {
                    counts.fixings += 1;
                    changed = true;
                }
                if node.status != NodeStatus::Open {
                    return counts;
                }
            }
        }
        if rules.implied_cuts {
            let zeros: Vec<Pair> = node.fixed_vars.iter().filter(|(_, &s)| !s).map(|(p, _)| *p).collect();
            let mut implied = Vec::new();
            for t in node.local_cuts() {
                for i in t.nodes() {
                    let others: Vec<usize> = t.nodes().into_iter().filter(|&v| v != i).collect();
                    for z in zeros.iter().filter(|z| z.contains(i)) {
                        let p = z.other(i);
                        if !t.contains(p) {
                            implied.push(Triple::new(p, others[0], others[1]));
                        }
                    }
                }
            }
            for t in implied {
                if node.add_local_cut(t) {
                    counts.cuts += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return counts;
        }
    }
}

/// Selection score of one node: `1 - e^(-f) + β + |d| / (n - 1)`.
pub fn node_score(fixed_incident: usize, in_history: bool, degree: f64, n: usize) -> f64 {
    let beta = if in_history { 1.0 } else { 0.0 };
    let spread = if n > 1 { degree.abs() / (n - 1) as f64 } else { 0.0 };
    1.0 - (-(fixed_incident as f64)).exp() + beta + spread
}

/// Picks a branching triple by roulette over summed node scores, after
/// restricting to the most positive stratum present among `candidates`.
/// Triples outside every stratum form a last tier.
pub fn select_triple<S: Scalar, R: Rng>(
    node: &SearchNode<S>,
    candidates: &[Triple],
    strata: &TripleSets,
    g: &WeightedGraph<S>,
    rng: &mut R,
) -> Option<Triple> {
    if candidates.len() <= 1 {
        return candidates.first().copied();
    }
    let tier = |t: &Triple| {
        if strata.t3.binary_search(t).is_ok() {
            0
        } else if strata.t2.binary_search(t).is_ok() {
            1
        } else if strata.t1.binary_search(t).is_ok() {
            2
        } else {
            3
        }
    };
    let best_tier = candidates.iter().map(tier).min()?;
    let pool: Vec<Triple> = candidates.iter().copied().filter(|t| tier(t) == best_tier).collect();
    if pool.len() == 1 {
        return Some(pool[0]);
    }
    let n = g.node_count();
    let mut fixed_incident = vec![0usize; n];
    for p in node.fixed_vars.keys() {
        fixed_incident[p.lo] += 1;
        fixed_incident[p.hi] += 1;
    }
    let mut in_history = vec![false; n];
    for d in &node.branch_history {
        for v in d.nodes() {
            in_history[v] = true;
        }
    }
    let score: Vec<f64> = (0..n)
        .map(|v| node_score(fixed_incident[v], in_history[v], g.degree_unchecked(v).as_f64(), n))
        .collect();
    let weights: Vec<f64> = pool.iter().map(|t| t.nodes().iter().map(|&v| score[v]).sum()).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Some(pool[rng.gen_range(0..pool.len())]);
    }
    let mut r = rng.gen::<f64>() * total;
    for (t, w) in pool.iter().zip(&weights) {
        if r < *w {
            return Some(*t);
        }
        r -= w;
    }
    pool.last().copied()
}
