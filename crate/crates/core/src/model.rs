//! The strengthened integer program over pair variables.
//!
//! `x_ij = 0` means nodes `i` and `j` share a cluster. The objective is
//! `constant - Σ w_ij x_ij`, which equals the within-cluster weight for any
//! integral `x` describing a partition. Transitivity constraints are only
//! kept for orientations whose two apex pairs include a strictly positive
//! weight; the rest of the classic constraint set is redundant under the
//! maximisation objective. Retained constraints are separated lazily.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::graph::{Partition, WeightedGraph};
use crate::scalar::Scalar;

/// Unordered node pair, stored with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub lo: usize,
    pub hi: usize,
}

impl Pair {
    pub fn new(a: usize, b: usize) -> Self {
        debug_assert_ne!(a, b, "pairs join distinct nodes");
        Self { lo: a.min(b), hi: a.max(b) }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.lo == v || self.hi == v
    }

    pub fn other(&self, v: usize) -> usize {
        if self.lo == v {
            self.hi
        } else {
            self.lo
        }
    }
}

/// Node triple, sorted ascending.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple(pub usize, pub usize, pub usize);

impl Triple {
    pub fn new(a: usize, b: usize, c: usize) -> Self {
        let mut t = [a, b, c];
        t.sort_unstable();
        debug_assert!(t[0] < t[1] && t[1] < t[2], "triple members must be distinct");
        Self(t[0], t[1], t[2])
    }

    pub fn nodes(&self) -> [usize; 3] {
        [self.0, self.1, self.2]
    }

    pub fn pairs(&self) -> [Pair; 3] {
        [Pair::new(self.0, self.1), Pair::new(self.0, self.2), Pair::new(self.1, self.2)]
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v || self.2 == v
    }
}

/// A linear inequality over pair variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cut {
    /// `x(apex, a) + x(apex, b) >= x(a, b)`.
    Transitivity { apex: usize, a: usize, b: usize },
    /// `x_ij + x_ik + x_jk >= 2`: at most one pair of the triple is together.
    AtLeastTwo(Triple),
}

impl Cut {
    pub fn transitivity(apex: usize, a: usize, b: usize) -> Self {
        Cut::Transitivity { apex, a: a.min(b), b: a.max(b) }
    }

    pub fn triple(&self) -> Triple {
        match *self {
            Cut::Transitivity { apex, a, b } => Triple::new(apex, a, b),
            Cut::AtLeastTwo(t) => t,
        }
    }

    /// Left-hand side terms of `Σ coeff·x >= rhs`.
    pub fn terms(&self) -> [(Pair, f64); 3] {
        match *self {
            Cut::Transitivity { apex, a, b } => {
                [(Pair::new(apex, a), 1.0), (Pair::new(apex, b), 1.0), (Pair::new(a, b), -1.0)]
            }
            Cut::AtLeastTwo(t) => {
                let [p, q, r] = t.pairs();
                [(p, 1.0), (q, 1.0), (r, 1.0)]
            }
        }
    }

    pub fn rhs(&self) -> f64 {
        match self {
            Cut::Transitivity { .. } => 0.0,
            Cut::AtLeastTwo(_) => 2.0,
        }
    }

    /// `rhs - lhs`; positive means violated.
    pub fn violation<S: Scalar>(&self, x: &DenseX<S>) -> S {
        let lhs = self
            .terms()
            .iter()
            .fold(S::zero(), |acc, &(p, c)| acc + S::of(c) * x.get(p.lo, p.hi));
        S::of(self.rhs()) - lhs
    }
}

/// Full `n × n` view of a pair assignment. Pairs without a variable read as
/// 1 (separate clusters).
#[derive(Clone, Debug)]
pub struct DenseX<S> {
    n: usize,
    values: Vec<S>,
}

impl<S: Scalar> DenseX<S> {
    pub fn separated(n: usize) -> Self {
        Self { n, values: vec![S::one(); n * n] }
    }

    pub fn set(&mut self, p: Pair, v: S) {
        self.values[p.lo * self.n + p.hi] = v;
        self.values[p.hi * self.n + p.lo] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[i * self.n + j]
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn triple_sum(&self, t: Triple) -> S {
        self.get(t.0, t.1) + self.get(t.0, t.2) + self.get(t.1, t.2)
    }
}

/// Triples with at least one strictly positive pair, split by how many of
/// their three pairs are strictly positive.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TripleSets {
    pub t3: Vec<Triple>,
    pub t2: Vec<Triple>,
    pub t1: Vec<Triple>,
}

impl TripleSets {
    pub fn build<S: Scalar>(g: &WeightedGraph<S>) -> Self {
        let signs = SignMatrix::new(g);
        let mut sets = Self::default();
        let n = g.node_count();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    match signs.positive_count(Triple(i, j, k)) {
                        3 => sets.t3.push(Triple(i, j, k)),
                        2 => sets.t2.push(Triple(i, j, k)),
                        1 => sets.t1.push(Triple(i, j, k)),
                        _ => {}
                    }
                }
            }
        }
        sets
    }

    pub fn len(&self) -> usize {
        self.t3.len() + self.t2.len() + self.t1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, t: &Triple) -> bool {
        [&self.t3, &self.t2, &self.t1].iter().any(|s| s.binary_search(t).is_ok())
    }
}

/// Dense sign lookup: `+1`, `-1` or `0` per pair.
#[derive(Clone, Debug)]
pub(crate) struct SignMatrix {
    n: usize,
    signs: Vec<i8>,
}

impl SignMatrix {
    pub(crate) fn new<S: Scalar>(g: &WeightedGraph<S>) -> Self {
        let n = g.node_count();
        let mut signs = vec![0i8; n * n];
        for (i, j, w) in g.pair_edges() {
            let s = if w > S::zero() { 1 } else { -1 };
            signs[i * n + j] = s;
            signs[j * n + i] = s;
        }
        Self { n, signs }
    }

    pub(crate) fn positive(&self, i: usize, j: usize) -> bool {
        self.signs[i * self.n + j] > 0
    }

    pub(crate) fn positive_count(&self, t: Triple) -> usize {
        t.pairs().iter().filter(|p| self.positive(p.lo, p.hi)).count()
    }

    /// Whether the orientation with apex `p` is kept in the strengthened pool.
    pub(crate) fn retains(&self, apex: usize, a: usize, b: usize) -> bool {
        self.positive(apex, a) || self.positive(apex, b)
    }
}

/// 3·C(n, 3): size of the classic transitivity constraint set.
pub fn classic_constraint_count(n: usize) -> u64 {
    if n < 3 {
        return 0;
    }
    let n = n as u64;
    n * (n - 1) * (n - 2) / 2
}

/// Relaxation state for one connected graph.
#[derive(Clone, Debug)]
pub struct CpModel<S> {
    n: usize,
    pairs: Vec<Pair>,
    index: Vec<u32>,
    objective: Vec<S>,
    constant: S,
    signs: SignMatrix,
    pub active_cuts: Vec<Cut>,
    pub fixings: Vec<Option<bool>>,
}

const NO_VAR: u32 = u32::MAX;

impl<S: Scalar> CpModel<S> {
    /// Variables cover every edge plus every pair lying in a triple with a
    /// positive pair: equivalently, edges and pairs touching a node that has
    /// a positive edge. Starts with no active cuts.
    pub fn build(g: &WeightedGraph<S>) -> Self {
        let n = g.node_count();
        let signs = SignMatrix::new(g);
        let has_positive: Vec<bool> =
            (0..n).map(|v| g.neighbors(v).iter().any(|&(_, w)| w > S::zero())).collect();
        let mut pairs = Vec::new();
        let mut index = vec![NO_VAR; n * n];
        let mut objective = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = g.weight(i, j);
                let covered = n >= 3 && (has_positive[i] || has_positive[j]);
                if w != S::zero() || covered {
                    let id = pairs.len() as u32;
                    index[i * n + j] = id;
                    index[j * n + i] = id;
                    pairs.push(Pair::new(i, j));
                    objective.push(-w);
                }
            }
        }
        let constant = g.edges().map(|(_, _, w)| w).sum();
        let fixings = vec![None; pairs.len()];
        Self { n, pairs, index, objective, constant, signs, active_cuts: Vec::new(), fixings }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn var_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn var_of(&self, p: Pair) -> Option<usize> {
        let id = self.index[p.lo * self.n + p.hi];
        (id != NO_VAR).then_some(id as usize)
    }

    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    pub fn constant(&self) -> S {
        self.constant
    }

    /// Objective weight of `p`; zero for pairs without a variable.
    pub fn coeff(&self, p: Pair) -> S {
        self.var_of(p).map_or(S::zero(), |v| self.objective[v])
    }

    pub fn objective_value(&self, x: &[S]) -> S {
        self.objective.iter().zip(x).fold(self.constant, |acc, (&c, &v)| acc + c * v)
    }

    /// Variable bounds after fixings.
    pub fn bounds(&self) -> Vec<(S, S)> {
        self.fixings
            .iter()
            .map(|f| match f {
                Some(false) => (S::zero(), S::zero()),
                Some(true) => (S::one(), S::one()),
                None => (S::zero(), S::one()),
            })
            .collect()
    }

    pub fn fix(&mut self, p: Pair, separate: bool) -> bool {
        match self.var_of(p) {
            Some(v) => {
                self.fixings[v] = Some(separate);
                true
            }
            None => false,
        }
    }

    pub fn dense_x(&self, x: &[S]) -> DenseX<S> {
        let mut d = DenseX::separated(self.n);
        for (p, &v) in self.pairs.iter().zip(x) {
            d.set(*p, v);
        }
        d
    }

    /// Whether the orientation `x(apex,a) + x(apex,b) >= x(a,b)` is in the
    /// retained pool.
    pub fn retains(&self, apex: usize, a: usize, b: usize) -> bool {
        self.signs.retains(apex, a, b)
    }

    pub fn in_pool(&self, t: Triple) -> bool {
        self.signs.positive_count(t) > 0
    }

    pub fn positive_count(&self, t: Triple) -> usize {
        self.signs.positive_count(t)
    }

    /// Every retained orientation, in triple order.
    pub fn pool(&self) -> Vec<Cut> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                for k in j + 1..self.n {
                    for (apex, a, b) in [(k, i, j), (j, i, k), (i, j, k)] {
                        if self.signs.retains(apex, a, b) {
                            out.push(Cut::transitivity(apex, a, b));
                        }
                    }
                }
            }
        }
        out
    }

    /// Activates the whole retained pool instead of separating lazily.
    pub fn materialize_all_cuts(&mut self) {
        self.active_cuts = self.pool();
    }

    /// Up to `cap` retained constraints violated by more than the
    /// feasibility tolerance, most violated first, ties by triple order.
    pub fn separate_violations(&self, x: &[S], cap: usize) -> Vec<Cut> {
        self.separate_dense(&self.dense_x(x), cap)
    }

    pub fn separate_dense(&self, x: &DenseX<S>, cap: usize) -> Vec<Cut> {
        let tol = S::feas_tol();
        let n = self.n;
        let mut found: Vec<(S, Triple, Cut)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let xij = x.get(i, j);
                for k in j + 1..n {
                    let (xik, xjk) = (x.get(i, k), x.get(j, k));
                    let t = Triple(i, j, k);
                    let orientations = [(k, i, j, xik + xjk - xij), (j, i, k, xij + xjk - xik), (i, j, k, xij + xik - xjk)];
                    for (apex, a, b, slack) in orientations {
                        if -slack > tol && self.signs.retains(apex, a, b) {
                            found.push((-slack, t, Cut::transitivity(apex, a, b)));
                        }
                    }
                }
            }
        }
        found.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        found.truncate(cap);
        found.into_iter().map(|(_, _, c)| c).collect()
    }

    /// Pool triples with `0 < x_ij + x_ik + x_jk < 2`: they satisfy neither
    /// "all together" nor "at most one pair together".
    pub fn violated_branch_triples(&self, triples: &TripleSets, x: &[S]) -> Vec<Triple> {
        let d = self.dense_x(x);
        let mut out: Vec<Triple> = [&triples.t3, &triples.t2, &triples.t1]
            .into_iter()
            .flatten()
            .copied()
            .filter(|&t| splits_disjunction(d.triple_sum(t)))
            .collect();
        out.sort_unstable();
        out
    }

    /// Cluster repair for an integral assignment over the model variables.
    pub fn pp(&self, x: &[S]) -> Partition {
        pp_postprocess(self.n, self.pairs.iter().zip(x).filter(|(_, v)| **v < S::of(0.5)).map(|(p, _)| *p))
    }

    /// Text dump in CPLEX LP format.
    pub fn to_lp_format(&self) -> String {
        let name = |p: &Pair| format!("x_{}_{}", p.lo, p.hi);
        let mut out = String::new();
        let _ = writeln!(out, "\\ objective constant: {}", self.constant);
        let _ = writeln!(out, "Maximize");
        let _ = write!(out, " obj:");
        for (p, c) in self.pairs.iter().zip(&self.objective) {
            if *c != S::zero() {
                let sign = if *c < S::zero() { '-' } else { '+' };
                let _ = write!(out, " {sign} {} {}", c.abs(), name(p));
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Subject To");
        for (r, cut) in self.active_cuts.iter().enumerate() {
            let _ = write!(out, " c{r}:");
            for (p, c) in cut.terms() {
                let sign = if c < 0.0 { '-' } else { '+' };
                let _ = write!(out, " {sign} {}", name(&p));
            }
            let _ = writeln!(out, " >= {}", cut.rhs());
        }
        let _ = writeln!(out, "Bounds");
        for ((p, fix), (lo, hi)) in self.pairs.iter().zip(&self.fixings).zip(self.bounds()) {
            match fix {
                Some(_) => {
                    let _ = writeln!(out, " {} = {}", name(p), lo);
                }
                None => {
                    let _ = writeln!(out, " {lo} <= {} <= {hi}", name(p));
                }
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}

pub(crate) fn splits_disjunction<S: Scalar>(sum: S) -> bool {
    let tol = S::feas_tol();
    sum > tol && sum < S::of(2.0) - tol
}

/// Clusters are the connected components of the "together" pairs.
pub fn pp_postprocess(n: usize, together: impl IntoIterator<Item = Pair>) -> Partition {
    let mut dsu = DisjointSets::new(n);
    for p in together {
        dsu.union(p.lo, p.hi);
    }
    Partition::from_assignment(&dsu.roots())
}
