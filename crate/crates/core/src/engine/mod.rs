//! Branch-and-cut search over triples.
//!
//! Nodes are explored level by level. Within a level every node is
//! evaluated against the incumbent as it stood when the level started, so
//! results do not depend on evaluation order and the level can be spread
//! over worker threads without changing the outcome.

mod bounds;
mod node;

use std::collections::{HashMap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bounds::{compute_gap, root_bounds, root_bounds_until, upper_bound_subnetwork, RootBounds, ABS_GAP_TOL, GAP_EPS};
pub use node::{
    branch, branch_pair, fix_by_reduced_cost, node_score, propagate_logical, select_triple, Decision,
    FathomReason, NodeRelaxation, NodeStatus, PropagationCounts, PropagationRules, SearchNode, Side,
};

use crate::error::{Error, Result};
use crate::graph::{assignment_weight, partition_weight, Partition, WeightedGraph};
use crate::heuristic::{
    heuristic_left_branch, heuristic_partition, heuristic_right_branch, heuristic_run, median_delta,
    HeuristicConfig,
};
use crate::lp::{DualSimplex, LpBackend, LpProblem, LpRow, LpSolution, LpStatus, SeparationLimits};
use crate::model::{pp_postprocess, splits_disjunction, CpModel, Cut, DenseX, Pair, Triple, TripleSets};
use crate::preprocess::{decompose_components, lift_partition, reduce_pendants, ReductionLog};
use crate::scalar::Scalar;

/// Slack used when comparing a bound against the incumbent.
pub const FATHOM_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Stop once `(bound - incumbent) / bound` drops to this value.
    pub gap_tolerance: f64,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    pub workers: usize,
    pub separation: SeparationLimits,
    /// Weight penalty for the keep-apart heuristic; defaults to the
    /// absolute median edge weight.
    pub delta: Option<f64>,
    pub reduce_pendants: bool,
    pub reduced_cost_fixing: bool,
    pub logical_propagation: bool,
    pub implied_cuts: bool,
    pub heuristic: HeuristicConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-6,
            time_limit: None,
            seed: 0,
            workers: 1,
            separation: SeparationLimits::default(),
            delta: None,
            reduce_pendants: true,
            reduced_cost_fixing: true,
            logical_propagation: true,
            implied_cuts: true,
            heuristic: HeuristicConfig::default(),
        }
    }
}

impl SolveConfig {
    pub fn with_gap(gap_tolerance: f64) -> Self {
        Self { gap_tolerance, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gap_tolerance > 0.0 && self.gap_tolerance < 1.0) {
            return Err(Error::InvalidInput(format!("gap tolerance {} outside (0, 1)", self.gap_tolerance)));
        }
        if self.workers == 0 {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidInput(format!("delta {d} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    fn rules(&self) -> PropagationRules {
        PropagationRules { logical: self.logical_propagation, implied_cuts: self.implied_cuts }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    GapReached,
    TimeLimit,
    /// Every node was fathomed: the incumbent is optimal.
    Exhausted,
    /// Only the root heuristic ran; the bound comes from the root relaxation.
    HeuristicOnly,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub components: usize,
    pub reduction_steps: usize,
    pub nodes_explored: usize,
    pub lp_solves: usize,
    pub cuts_added: usize,
    pub variables_fixed: usize,
    pub fathomed_integral: usize,
    pub fathomed_infeasible: usize,
    pub fathomed_bound: usize,
    pub max_depth: usize,
    pub wall_time_secs: f64,
}

/// Whole-graph incumbent and bound after one level of one component.
/// Components not yet searched contribute their root heuristic and
/// combinatorial bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord<S> {
    pub component: usize,
    pub depth: usize,
    pub evaluated: usize,
    pub open_after: usize,
    pub incumbent: S,
    pub best_bound: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<S> {
    pub best_partition: Partition,
    pub incumbent: S,
    pub best_bound: S,
    pub gap: S,
    pub status: SolveStatus,
    pub stats: SolveStats,
    pub trace: Vec<LevelRecord<S>>,
}

/// Solves the clique partitioning problem on `g` to within
/// `cfg.gap_tolerance`.
pub fn solve<S: Scalar>(g: &WeightedGraph<S>, cfg: &SolveConfig) -> Result<SolveReport<S>> {
    cfg.validate()?;
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|t| start + t);
    let delta = cfg.delta.map(S::of).unwrap_or_else(|| median_delta(g));
    let pool = if cfg.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?,
        )
    } else {
        None
    };

    let mut stats = SolveStats::default();
    let mut prepared = Vec::new();
    for comp in decompose_components(g) {
        let (graph, log) = if cfg.reduce_pendants {
            reduce_pendants(&comp.graph)
        } else {
            (comp.graph.clone(), ReductionLog::identity(comp.graph.node_count()))
        };
        stats.reduction_steps += log.steps.len();
        let root = heuristic_run(&graph, &cfg.heuristic);
        let upper = upper_bound_subnetwork(&graph).max(root.objective);
        prepared.push(Prepared { graph, log, id_map: comp.id_map, root_lower: root.objective, root_partition: root.partition, root_upper: upper });
    }
    stats.components = prepared.len();

    let mut done_lower = S::zero();
    let mut done_upper = S::zero();
    let mut pending_lower: S = prepared.iter().map(|p| p.root_lower).sum();
    let mut pending_upper: S = prepared.iter().map(|p| p.root_upper).sum();
    let mut trace = Vec::new();
    let mut results = Vec::new();
    for (c, prep) in prepared.iter().enumerate() {
        pending_lower = pending_lower - prep.root_lower;
        pending_upper = pending_upper - prep.root_upper;
        let offsets = (done_lower + pending_lower, done_upper + pending_upper);
        let ctx = Context::new(&prep.graph, cfg, delta, deadline, pool.as_ref());
        let trace_start = trace.len();
        let mut run = ctx.search(c, prep, offsets, &mut trace, &mut stats)?;
        // A loose relative gap per component can add up to a loose overall
        // gap when some bounds are negative; tighten once in that case.
        if run.status == SolveStatus::GapReached && run.incumbent < run.bound {
            let lower_after = done_lower + run.incumbent + pending_lower;
            let upper_after = done_upper + run.bound + pending_upper;
            let overall = compute_gap(upper_after.max(lower_after), lower_after)?;
            if overall.as_f64() > cfg.gap_tolerance {
                let tight = SolveConfig { gap_tolerance: cfg.gap_tolerance.min(1e-9), ..cfg.clone() };
                let ctx = Context::new(&prep.graph, &tight, delta, deadline, pool.as_ref());
                // The second pass restarts from the root; keep its trace only.
                trace.truncate(trace_start);
                run = ctx.search(c, prep, offsets, &mut trace, &mut stats)?;
            }
        }
        done_lower = done_lower + run.incumbent;
        done_upper = done_upper + run.bound;
        results.push(run);
    }

    let n = g.node_count();
    let mut assignment = vec![0usize; n];
    let mut next = 0;
    for (prep, run) in prepared.iter().zip(&results) {
        let lifted = lift_partition(&prep.log, &run.partition)?;
        for (local, &global) in prep.id_map.iter().enumerate() {
            assignment[global] = next + lifted.cluster_of(local);
        }
        next += lifted.cluster_count();
    }
    let best_partition = Partition::from_assignment(&assignment);
    let incumbent = partition_weight(g, &best_partition)?;
    let summed: S = results.iter().map(|r| r.incumbent).sum();
    let scale = S::one() + g.edges().map(|(_, _, w)| w.abs()).sum::<S>();
    if (incumbent - summed).abs() > S::int_tol() * scale {
        return Err(Error::Inconsistent(format!("lifted partition weighs {incumbent}, components sum to {summed}")));
    }
    let exhausted = results.iter().all(|r| r.status == SolveStatus::Exhausted);
    let best_bound = if exhausted { incumbent } else { done_upper.max(incumbent) };
    let gap = compute_gap(best_bound, incumbent)?;
    let status = if results.iter().any(|r| r.status == SolveStatus::TimeLimit) {
        SolveStatus::TimeLimit
    } else if exhausted {
        SolveStatus::Exhausted
    } else {
        SolveStatus::GapReached
    };
    stats.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(SolveReport { best_partition, incumbent, best_bound, gap, status, stats, trace })
}

/// Runs only the root heuristic and reports it against the root bounds.
pub fn solve_heuristic_only<S: Scalar>(g: &WeightedGraph<S>, cfg: &SolveConfig) -> Result<SolveReport<S>> {
    cfg.validate()?;
    let start = Instant::now();
    let rb = root_bounds_until(g, &cfg.heuristic, cfg.separation, cfg.time_limit.map(|t| start + t));
    let gap = compute_gap(rb.upper, rb.lower)?;
    let stats = SolveStats {
        components: g.connected_components().len(),
        lp_solves: 1,
        wall_time_secs: start.elapsed().as_secs_f64(),
        ..SolveStats::default()
    };
    Ok(SolveReport {
        best_partition: rb.partition,
        incumbent: rb.lower,
        best_bound: rb.upper,
        gap,
        status: SolveStatus::HeuristicOnly,
        stats,
        trace: Vec::new(),
    })
}

struct Prepared<S> {
    graph: WeightedGraph<S>,
    log: ReductionLog<S>,
    id_map: Vec<usize>,
    root_lower: S,
    root_partition: Partition,
    root_upper: S,
}

struct ComponentRun<S> {
    partition: Partition,
    incumbent: S,
    bound: S,
    status: SolveStatus,
}

struct Context<'a, S> {
    g: &'a WeightedGraph<S>,
    cfg: &'a SolveConfig,
    model: CpModel<S>,
    strata: TripleSets,
    delta: S,
    deadline: Option<Instant>,
    pool: Option<&'a rayon::ThreadPool>,
}

#[derive(Default)]
struct NodeStats {
    lp_solves: usize,
    cuts_added: usize,
    variables_fixed: usize,
}

struct NodeEval<S> {
    node: SearchNode<S>,
    evaluated: bool,
    candidates: Vec<(S, Partition)>,
    children: Vec<SearchNode<S>>,
    stats: NodeStats,
}

fn past(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-node generator derived from the solver seed and the node's path.
fn node_rng<S>(seed: u64, node: &SearchNode<S>) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for d in &node.branch_history {
        h = splitmix(h ^ if d.side() == Side::Left { 1 } else { 2 });
    }
    ChaCha8Rng::seed_from_u64(h)
}

impl<'a, S: Scalar> Context<'a, S> {
    fn new(
        g: &'a WeightedGraph<S>,
        cfg: &'a SolveConfig,
        delta: S,
        deadline: Option<Instant>,
        pool: Option<&'a rayon::ThreadPool>,
    ) -> Self {
        Self { g, cfg, model: CpModel::build(g), strata: TripleSets::build(g), delta, deadline, pool }
    }

    fn tol_reached(&self, bound: S, incumbent: S) -> Result<bool> {
        Ok(compute_gap(bound, incumbent)?.as_f64() <= self.cfg.gap_tolerance)
    }

    fn search(
        &self,
        component: usize,
        prep: &Prepared<S>,
        offsets: (S, S),
        trace: &mut Vec<LevelRecord<S>>,
        stats: &mut SolveStats,
    ) -> Result<ComponentRun<S>> {
        let slack = S::of(FATHOM_SLACK);
        let mut incumbent = prep.root_lower;
        let mut best = prep.root_partition.clone();
        let mut bound = prep.root_upper.max(incumbent);
        let record = |trace: &mut Vec<LevelRecord<S>>, depth, evaluated, open_after, inc: S, b: S| {
            trace.push(LevelRecord {
                component,
                depth,
                evaluated,
                open_after,
                incumbent: offsets.0 + inc,
                best_bound: offsets.1 + b,
            })
        };
        if self.tol_reached(bound, incumbent)? {
            record(trace, 0, 0, 0, incumbent, bound);
            return Ok(ComponentRun { partition: best, incumbent, bound, status: SolveStatus::GapReached });
        }
        let mut root = SearchNode::root(bound);
        root.heuristic_value = Some(incumbent);
        root.heuristic_partition = Some(best.clone());
        let mut level = vec![root];
        let mut depth = 0;
        loop {
            let lb = incumbent;
            let evals: Vec<Result<NodeEval<S>>> = match self.pool {
                Some(pool) => pool.install(|| level.into_par_iter().map(|n| self.evaluate(n, lb)).collect()),
                None => level.into_iter().map(|n| self.evaluate(n, lb)).collect(),
            };
            let mut children = Vec::new();
            let mut unevaluated = Vec::new();
            let mut evaluated = 0;
            for ev in evals {
                let ev = ev?;
                stats.lp_solves += ev.stats.lp_solves;
                stats.cuts_added += ev.stats.cuts_added;
                stats.variables_fixed += ev.stats.variables_fixed;
                if !ev.evaluated {
                    unevaluated.push(ev.node.bound());
                    continue;
                }
                evaluated += 1;
                stats.nodes_explored += 1;
                stats.max_depth = stats.max_depth.max(ev.node.depth);
                match ev.node.status {
                    NodeStatus::Fathomed(FathomReason::IntegralLp) => stats.fathomed_integral += 1,
                    NodeStatus::Fathomed(FathomReason::InfeasibleLp) => stats.fathomed_infeasible += 1,
                    NodeStatus::Fathomed(FathomReason::BoundDominated) => stats.fathomed_bound += 1,
                    NodeStatus::Open => {}
                }
                for (value, p) in ev.candidates {
                    if value > incumbent + slack {
                        incumbent = value;
                        best = p;
                    }
                }
                children.extend(ev.children);
            }
            // Children whose inherited bound no longer beats the incumbent
            // are dropped without evaluation.
            let before = children.len();
            children.retain(|c| c.status == NodeStatus::Open && c.bound() >= incumbent + slack);
            stats.fathomed_bound += before - children.len();
            let open_bound = children.iter().map(|c| c.bound()).chain(unevaluated.iter().copied()).fold(incumbent, S::max);
            bound = bound.min(open_bound).max(incumbent);
            let open_after = children.len() + unevaluated.len();
            record(trace, depth, evaluated, open_after, incumbent, bound);
            if open_after == 0 {
                return Ok(ComponentRun { partition: best, incumbent, bound: incumbent, status: SolveStatus::Exhausted });
            }
            if self.tol_reached(bound, incumbent)? {
                return Ok(ComponentRun { partition: best, incumbent, bound, status: SolveStatus::GapReached });
            }
            if !unevaluated.is_empty() || past(self.deadline) {
                return Ok(ComponentRun { partition: best, incumbent, bound, status: SolveStatus::TimeLimit });
            }
            level = children;
            depth += 1;
        }
    }

    fn heuristic_for(&self, node: &SearchNode<S>, seed: u64) -> Result<Partition> {
        let cfg = HeuristicConfig { seed, ..self.cfg.heuristic };
        Ok(match node.branch_history.last() {
            None => heuristic_partition(self.g, &cfg),
            Some(Decision::Triple(t, Side::Right)) => heuristic_right_branch(self.g, (t.0, t.1, t.2), self.delta, &cfg),
            Some(_) => heuristic_left_branch(self.g, &node.merged_sets, &cfg)?,
        })
    }

    /// Column layout: model variables, then out-of-scope pairs that appear
    /// in the node's cuts, by first appearance.
    fn columns(&self, node: &SearchNode<S>) -> (Vec<Pair>, HashMap<Pair, usize>) {
        let mut cols = self.model.pairs().to_vec();
        let mut extra = HashMap::new();
        for cut in &node.cuts {
            for (p, _) in cut.terms() {
                if self.model.var_of(p).is_none() && !extra.contains_key(&p) {
                    extra.insert(p, cols.len());
                    cols.push(p);
                }
            }
        }
        (cols, extra)
    }

    fn col_of(&self, extra: &HashMap<Pair, usize>, p: Pair) -> usize {
        self.model.var_of(p).unwrap_or_else(|| extra[&p])
    }

    fn problem(&self, node: &SearchNode<S>, cols: &[Pair], extra: &HashMap<Pair, usize>) -> LpProblem<S> {
        let mut objective = self.model.objective().to_vec();
        objective.resize(cols.len(), S::zero());
        let mut lower = vec![S::zero(); cols.len()];
        let mut upper = vec![S::one(); cols.len()];
        for (j, p) in cols.iter().enumerate() {
            match node.fixed(*p) {
                Some(true) => lower[j] = S::one(),
                Some(false) => upper[j] = S::zero(),
                None => {}
            }
        }
        let rows = node
            .cuts
            .iter()
            .map(|cut| LpRow {
                terms: cut.terms().iter().map(|&(p, c)| (self.col_of(extra, p), S::of(c))).collect(),
                rhs: S::of(cut.rhs()),
            })
            .collect();
        LpProblem { objective, constant: self.model.constant(), lower, upper, rows }
    }

    /// Pair values of the node: fixings, then LP columns; anything else
    /// reads as apart.
    fn dense(&self, node: &SearchNode<S>, cols: &[Pair], x: &[S]) -> DenseX<S> {
        let mut d = DenseX::separated(self.g.node_count());
        for (p, &v) in cols.iter().zip(x) {
            d.set(*p, v);
        }
        for (p, &sep) in &node.fixed_vars {
            d.set(*p, if sep { S::one() } else { S::zero() });
        }
        d
    }

    fn solve_relaxation(&self, node: &mut SearchNode<S>, stats: &mut NodeStats) -> (Vec<Pair>, LpSolution<S>) {
        let mut backend = DualSimplex::with_deadline(self.deadline);
        let mut present: HashSet<Cut> = node.cuts.iter().copied().collect();
        let mut round = 0;
        let mut last: Option<(Vec<Pair>, LpSolution<S>)> = None;
        loop {
            let (cols, extra) = self.columns(node);
            let problem = self.problem(node, &cols, &extra);
            let sol = backend.solve(&problem, node.basis.as_ref());
            stats.lp_solves += 1;
            // A round cut off by the deadline falls back to the previous
            // one, which had fewer cuts and so still bounds the node.
            if sol.status == LpStatus::IterationLimit {
                if let Some(prev) = last {
                    return prev;
                }
            }
            if sol.status != LpStatus::Optimal || round >= self.cfg.separation.max_rounds || past(self.deadline) {
                return (cols, sol);
            }
            let d = self.dense(node, &cols, &sol.primal);
            let cuts: Vec<Cut> = self
                .model
                .separate_dense(&d, self.cfg.separation.cuts_per_round)
                .into_iter()
                .filter(|c| present.insert(*c))
                .collect();
            if cuts.is_empty() {
                return (cols, sol);
            }
            stats.cuts_added += cuts.len();
            node.cuts.extend(cuts);
            node.basis = Some(sol.basis.clone());
            last = Some((cols, sol));
            round += 1;
        }
    }

    fn evaluate(&self, mut node: SearchNode<S>, lb: S) -> Result<NodeEval<S>> {
        let mut stats = NodeStats::default();
        let mut candidates = Vec::new();
        let done = |node, evaluated, candidates, stats| Ok(NodeEval { node, evaluated, candidates, children: Vec::new(), stats });
        if node.status != NodeStatus::Open {
            return done(node, true, candidates, stats);
        }
        if past(self.deadline) {
            return done(node, false, candidates, stats);
        }
        let mut rng = node_rng(self.cfg.seed, &node);
        let slack = S::of(FATHOM_SLACK);
        let mut lb = lb;
        if node.heuristic_value.is_none() {
            let p = self.heuristic_for(&node, rng.gen())?;
            let w = assignment_weight(self.g, p.assignment());
            node.heuristic_value = Some(w);
            node.heuristic_partition = Some(p.clone());
            candidates.push((w, p));
        }
        lb = lb.max(node.heuristic_value.unwrap());

        let (cols, sol) = self.solve_relaxation(&mut node, &mut stats);
        let z = match sol.status {
            LpStatus::Infeasible => {
                node.status = NodeStatus::Fathomed(FathomReason::InfeasibleLp);
                return done(node, true, candidates, stats);
            }
            LpStatus::IterationLimit => node.parent_bound,
            LpStatus::Optimal => sol.objective.min(node.parent_bound),
        };
        node.lp_bound = Some(z);
        node.basis = Some(sol.basis.clone());
        if z < lb + slack {
            node.status = NodeStatus::Fathomed(FathomReason::BoundDominated);
            return done(node, true, candidates, stats);
        }

        let d = self.dense(&node, &cols, &sol.primal);
        let int_tol = S::int_tol();
        let optimal = sol.status == LpStatus::Optimal;
        let integral = optimal && sol.primal.iter().all(|&v| v <= int_tol || v >= S::one() - int_tol);
        if integral {
            let together = cols.iter().chain(node.fixed_vars.keys()).filter(|p| d.get(p.lo, p.hi) < S::of(0.5)).copied();
            let p = pp_postprocess(self.g.node_count(), together);
            let value = assignment_weight(self.g, p.assignment());
            let rounded: Vec<S> = sol.primal.iter().map(|v| v.round()).collect();
            let z_round = rounded.iter().zip(self.model.objective()).fold(self.model.constant(), |a, (&x, &c)| a + c * x);
            let accept = value >= z_round - S::obj_tol() * (S::one() + z_round.abs());
            candidates.push((value, p));
            if accept {
                node.status = NodeStatus::Fathomed(FathomReason::IntegralLp);
                return done(node, true, candidates, stats);
            }
        }

        if self.cfg.reduced_cost_fixing && optimal {
            let relax = NodeRelaxation { columns: cols.clone(), solution: sol.clone() };
            let fixed = fix_by_reduced_cost(&mut node, &relax, lb);
            stats.variables_fixed += fixed;
            if fixed > 0 {
                let c = propagate_logical(&mut node, self.cfg.rules());
                stats.variables_fixed += c.fixings;
                stats.cuts_added += c.cuts;
            }
            if node.status != NodeStatus::Open {
                return done(node, true, candidates, stats);
            }
        }

        let rules = self.cfg.rules();
        let children = match self.choose(&node, &d, &cols, integral, &mut rng)? {
            Choice::Triple(t) => {
                let (l, r) = branch(&node, t, rules)?;
                vec![l, r]
            }
            Choice::Pair(p) => {
                let (l, r) = branch_pair(&node, p, rules)?;
                vec![l, r]
            }
            Choice::Contradiction => {
                node.status = NodeStatus::Fathomed(FathomReason::InfeasibleLp);
                Vec::new()
            }
        };
        for c in &children {
            stats.variables_fixed += c.fixed_vars.len() - node.fixed_vars.len();
        }
        Ok(NodeEval { node, evaluated: true, candidates, children, stats })
    }

    fn choose(
        &self,
        node: &SearchNode<S>,
        d: &DenseX<S>,
        cols: &[Pair],
        integral: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Choice> {
        let usable = |t: &Triple| !node.decided(*t);
        if integral {
            return Ok(match intransitive_triple(d) {
                Some(t) if usable(&t) => Choice::Triple(t),
                Some(_) => Choice::Contradiction,
                None => {
                    return Err(Error::Inconsistent("integral relaxation without an intransitive triple".into()))
                }
            });
        }
        let mut candidates: Vec<Triple> = [&self.strata.t3, &self.strata.t2, &self.strata.t1]
            .into_iter()
            .flatten()
            .copied()
            .filter(|t| splits_disjunction(d.triple_sum(*t)) && usable(t))
            .collect();
        if candidates.is_empty() {
            let n = self.g.node_count();
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let t = Triple(i, j, k);
                        if splits_disjunction(d.triple_sum(t)) && usable(&t) {
                            candidates.push(t);
                        }
                    }
                }
            }
        }
        candidates.sort_unstable();
        if let Some(t) = select_triple(node, &candidates, &self.strata, self.g, rng) {
            return Ok(Choice::Triple(t));
        }
        let int_tol = S::int_tol();
        match cols.iter().find(|p| {
            let v = d.get(p.lo, p.hi);
            node.fixed(**p).is_none() && v > int_tol && v < S::one() - int_tol
        }) {
            Some(p) => Ok(Choice::Pair(*p)),
            None => Err(Error::Inconsistent("fractional relaxation without a branching candidate".into())),
        }
    }
}

enum Choice {
    Triple(Triple),
    Pair(Pair),
    Contradiction,
}

/// A triple with two together pairs and one apart pair, found along a
/// shortest path of together pairs.
fn intransitive_triple<S: Scalar>(d: &DenseX<S>) -> Option<Triple> {
    let n = d.node_count();
    let half = S::of(0.5);
    let adj: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| j != i && d.get(i, j) < half).collect()).collect();
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut via = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= 2 {
                break;
            }
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    via[v] = u;
                    if dist[v] == 2 {
                        return Some(Triple::new(s, via[v], v));
                    }
                    queue.push_back(v);
                }
            }
        }
    }
    None
}
