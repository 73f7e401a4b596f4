//! LP relaxation solving.
//!
//! The default backend is a revised dual simplex for problems of the
//! form
//!
//! ```text
//! maximise  constant + c·x
//! s.t.      a_r·x >= b_r          for every row r
//!           l_j <= x_j <= u_j     with finite l_j, u_j
//! ```
//!
//! Every structural variable is boxed, so the all-slack basis with each
//! variable parked at its objective-preferred bound is dual feasible. Rows
//! can therefore be appended between solves and the previous basis reused.

use std::any::Any;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::model::CpModel;
use crate::scalar::Scalar;
use crate::graph::WeightedGraph;

#[derive(Clone, Debug, PartialEq)]
pub struct LpRow<S> {
    pub terms: Vec<(usize, S)>,
    pub rhs: S,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem<S> {
    pub objective: Vec<S>,
    pub constant: S,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub rows: Vec<LpRow<S>>,
}

impl<S: Scalar> LpProblem<S> {
    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn objective_value(&self, x: &[S]) -> S {
        self.objective.iter().zip(x).fold(self.constant, |acc, (&c, &v)| acc + c * v)
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs = row.terms.iter().fold(S::zero(), |a, &(j, c)| a + c * x[j]);
            worst = worst.max(row.rhs - lhs);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

/// A basic variable: a structural column or the slack of a row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasicVar {
    Col(usize),
    Row(usize),
}

/// Warm-start token: which variables are basic, and which nonbasic
/// structurals sit at their upper bound.
#[derive(Clone, Default)]
pub struct Basis {
    pub basic: Vec<BasicVar>,
    pub at_upper: Vec<bool>,
    /// Basis inverse from the solve that produced the token; checked before
    /// reuse and rebuilt when stale.
    factor: Option<Arc<dyn Any + Send + Sync>>,
}

impl Basis {
    pub fn new(basic: Vec<BasicVar>, at_upper: Vec<bool>) -> Self {
        Self { basic, at_upper, factor: None }
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.basic == other.basic && self.at_upper == other.at_upper
    }
}

impl Eq for Basis {}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis").field("basic", &self.basic).field("at_upper", &self.at_upper).finish()
    }
}

struct Factor<S> {
    rn: Vec<usize>,
    minv: Inverse<S>,
}

/// Dense square matrix with spare capacity, so a row and column can be
/// appended or swap-removed without moving the rest.
#[derive(Clone)]
struct Inverse<S> {
    k: usize,
    cap: usize,
    data: Vec<S>,
}

impl<S: Scalar> Inverse<S> {
    fn from_square(k: usize, data: Vec<S>) -> Self {
        Self { k, cap: k, data }
    }

    fn at(&self, i: usize, c: usize) -> S {
        self.data[i * self.cap + c]
    }

    fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cap..i * self.cap + self.k]
    }

    fn row_mut(&mut self, i: usize) -> &mut [S] {
        let k = self.k;
        &mut self.data[i * self.cap..i * self.cap + k]
    }

    fn col(&self, c: usize) -> Vec<S> {
        (0..self.k).map(|i| self.at(i, c)).collect()
    }

    /// `self -= f zᵀ`.
    fn rank_one(&mut self, f: &[S], z: &[S]) {
        for (i, &fi) in f.iter().enumerate() {
            if fi != S::zero() {
                for (a, &zc) in self.row_mut(i).iter_mut().zip(z) {
                    *a = *a - fi * zc;
                }
            }
        }
    }

    /// Appends an empty last row and column.
    fn push(&mut self) {
        let k1 = self.k + 1;
        if k1 > self.cap {
            let cap = (2 * self.cap).max(k1).max(16);
            let mut data = vec![S::zero(); cap * cap];
            for i in 0..self.k {
                data[i * cap..i * cap + self.k].copy_from_slice(self.row(i));
            }
            self.data = data;
            self.cap = cap;
        }
        for i in 0..k1 {
            self.data[i * self.cap + self.k] = S::zero();
        }
        let last = self.k * self.cap;
        self.data[last..last + k1].iter_mut().for_each(|v| *v = S::zero());
        self.k = k1;
    }

    /// Drops row `i` and column `c`, moving the last ones into their place.
    fn swap_remove(&mut self, i: usize, c: usize) {
        let last = self.k - 1;
        if i != last {
            let (dst, src) = (i * self.cap, last * self.cap);
            self.data.copy_within(src..src + self.k, dst);
        }
        if c != last {
            for r in 0..last {
                self.data[r * self.cap + c] = self.data[r * self.cap + last];
            }
        }
        self.k = last;
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub objective: S,
    pub primal: Vec<S>,
    /// `c_j - yᵀA_j` for the maximisation: `<= 0` at a lower bound, `>= 0`
    /// at an upper bound when optimal.
    pub reduced_costs: Vec<S>,
    pub basis: Basis,
    pub pivots: usize,
}

/// Something that can solve [`LpProblem`]s.
pub trait LpBackend<S: Scalar> {
    fn solve(&mut self, problem: &LpProblem<S>, warm_start: Option<&Basis>) -> LpSolution<S>;
}

#[derive(Clone, Debug)]
pub struct DualSimplex {
    pub max_pivots: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
    /// Stop with [`LpStatus::IterationLimit`] once this instant has passed.
    pub deadline: Option<Instant>,
}

impl Default for DualSimplex {
    fn default() -> Self {
        Self { max_pivots: 1_000_000, bland_after: 1000, refactor_every: 64, deadline: None }
    }
}

impl DualSimplex {
    pub fn with_deadline(deadline: Option<Instant>) -> Self {
        Self { deadline, ..Self::default() }
    }
}

impl<S: Scalar> LpBackend<S> for DualSimplex {
    fn solve(&mut self, problem: &LpProblem<S>, warm_start: Option<&Basis>) -> LpSolution<S> {
        let mut state = match warm_start.and_then(|b| Tableau::warm(problem, b)) {
            Some(t) => t,
            None => Tableau::cold(problem),
        };
        let status = state.run(self);
        state.finish(status)
    }
}

/// Internally the problem is `min cost·z` over `z = (x, s)` with
/// `A x - s = b`, `s >= 0`, and `cost = -c`.
///
/// A basis holds `k` structurals and the slacks of all rows but `k` tight
/// ones. Ordering tight rows and basic structurals first, it reads
/// `[[M, 0], [N, -I]]` with inverse `[[M⁻¹, 0], [N M⁻¹, -I]]`, so only the
/// `k × k` inverse of `M` is stored. Cut pools keep `k` far below the row
/// count.
struct Tableau<'a, S> {
    p: &'a LpProblem<S>,
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, S)>>,
    /// Basic structurals; row index of `minv`.
    kc: Vec<usize>,
    /// Rows with a nonbasic slack; column index of `minv`.
    rn: Vec<usize>,
    kpos: Vec<usize>,
    rnpos: Vec<usize>,
    at_upper: Vec<bool>,
    minv: Inverse<S>,
    x: Vec<S>,
    s: Vec<S>,
    d: Vec<S>,
    pivots: usize,
}

const NONE: usize = usize::MAX;

/// Gauss-Jordan inverse of a row-major `k × k` matrix.
fn invert<S: Scalar>(mut a: Vec<S>, k: usize) -> Option<Vec<S>> {
    let mut inv = vec![S::zero(); k * k];
    for i in 0..k {
        inv[i * k + i] = S::one();
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x * k + col].abs().partial_cmp(&a[y * k + col].abs()).unwrap())?;
        if a[piv * k + col].abs() < S::pivot_tol() {
            return None;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
                inv.swap(piv * k + c, col * k + c);
            }
        }
        let dv = a[col * k + col];
        for c in 0..k {
            a[col * k + c] = a[col * k + c] / dv;
            inv[col * k + c] = inv[col * k + c] / dv;
        }
        for r in 0..k {
            let f = a[r * k + col];
            if r != col && f != S::zero() {
                for c in 0..k {
                    a[r * k + c] = a[r * k + c] - f * a[col * k + c];
                    inv[r * k + c] = inv[r * k + c] - f * inv[col * k + c];
                }
            }
        }
    }
    Some(inv)
}

impl<'a, S: Scalar> Tableau<'a, S> {
    fn skeleton(p: &'a LpProblem<S>) -> Self {
        let n = p.var_count();
        let m = p.rows.len();
        let mut cols = vec![Vec::new(); n];
        for (r, row) in p.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                cols[j].push((r, a));
            }
        }
        Self {
            p,
            n,
            m,
            cols,
            kc: Vec::new(),
            rn: Vec::new(),
            kpos: vec![NONE; n],
            rnpos: vec![NONE; m],
            at_upper: vec![false; n],
            minv: Inverse::from_square(0, Vec::new()),
            x: vec![S::zero(); n],
            s: vec![S::zero(); m],
            d: vec![S::zero(); n + m],
            pivots: 0,
        }
    }

    fn cold(p: &'a LpProblem<S>) -> Self {
        let mut t = Self::skeleton(p);
        for j in 0..t.n {
            t.at_upper[j] = p.objective[j] > S::zero();
        }
        t.recompute();
        t
    }

    /// Rows beyond the token's length are new and start with a basic slack.
    fn warm(p: &'a LpProblem<S>, basis: &Basis) -> Option<Self> {
        let mut t = Self::skeleton(p);
        let old_rows = basis.basic.len().min(t.m);
        let mut slack_basic = vec![false; t.m];
        for b in &basis.basic {
            match *b {
                BasicVar::Col(j) if j < t.n && t.kpos[j] == NONE => {
                    t.kpos[j] = t.kc.len();
                    t.kc.push(j);
                }
                BasicVar::Row(r) if r < t.m && !slack_basic[r] => slack_basic[r] = true,
                _ => return None,
            }
        }
        for r in 0..old_rows {
            if !slack_basic[r] {
                t.rnpos[r] = t.rn.len();
                t.rn.push(r);
            }
        }
        if t.rn.len() != t.kc.len() {
            return None;
        }
        for j in 0..t.n.min(basis.at_upper.len()) {
            t.at_upper[j] = basis.at_upper[j];
        }
        if !t.adopt(basis) && !t.refactor() {
            return None;
        }
        t.recompute();
        // Re-park nonbasic structurals on the dual-feasible side; a slack
        // cannot be flipped, so a wrong-signed one means starting cold.
        let tol = S::opt_tol();
        for j in 0..t.n {
            if t.kpos[j] == NONE {
                if t.d[j] < -tol {
                    t.at_upper[j] = true;
                } else if t.d[j] > tol {
                    t.at_upper[j] = false;
                }
            }
        }
        if t.rn.iter().any(|&r| t.d[t.n + r] < -tol) {
            return None;
        }
        t.recompute();
        Some(t)
    }

    fn k(&self) -> usize {
        self.kc.len()
    }

    fn cost(&self, j: usize) -> S {
        -self.p.objective[j]
    }

    fn nonbasic_value(&self, j: usize) -> S {
        if self.at_upper[j] {
            self.p.upper[j]
        } else {
            self.p.lower[j]
        }
    }

    /// Reuses the inverse stored in `basis` when it still inverts `M`.
    fn adopt(&mut self, basis: &Basis) -> bool {
        let Some(f) = basis.factor.as_ref().and_then(|f| f.downcast_ref::<Factor<S>>()) else {
            return false;
        };
        let k = self.k();
        if f.rn.len() != k || f.rn.iter().any(|&r| r >= self.m || self.rnpos[r] == NONE) {
            return false;
        }
        let rnpos_saved = self.rnpos.clone();
        for (i, &r) in f.rn.iter().enumerate() {
            self.rnpos[r] = i;
        }
        // Residual of `M · M⁻¹ = I`; `M` has only a few entries per row.
        let tol = (S::epsilon() * S::of(1e3)).max(S::of(1e-9));
        for (i, &r) in f.rn.iter().enumerate() {
            for c in 0..k {
                let v = self.p.rows[r]
                    .terms
                    .iter()
                    .filter(|t| self.kpos[t.0] != NONE)
                    .fold(S::zero(), |acc, &(j, a)| acc + a * f.minv.at(self.kpos[j], c));
                let e = if c == i { S::one() } else { S::zero() };
                if (v - e).abs() > tol {
                    self.rnpos = rnpos_saved;
                    return false;
                }
            }
        }
        self.rn = f.rn.clone();
        self.minv = f.minv.clone();
        true
    }

    /// Rebuilds `M⁻¹` from scratch.
    fn refactor(&mut self) -> bool {
        let k = self.k();
        let mut a = vec![S::zero(); k * k];
        for (pk, &j) in self.kc.iter().enumerate() {
            for &(r, c) in &self.cols[j] {
                if self.rnpos[r] != NONE {
                    a[self.rnpos[r] * k + pk] = c;
                }
            }
        }
        match invert(a, k) {
            Some(inv) => {
                self.minv = Inverse::from_square(k, inv);
                true
            }
            None => false,
        }
    }

    /// Basic values, duals and reduced costs from the current inverse.
    fn recompute(&mut self) {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            if self.kpos[j] == NONE {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        let rhs: Vec<S> = self
            .rn
            .iter()
            .map(|&r| {
                let row = &self.p.rows[r];
                row.terms
                    .iter()
                    .filter(|&&(j, _)| self.kpos[j] == NONE)
                    .fold(row.rhs, |acc, &(j, a)| acc - a * self.x[j])
            })
            .collect();
        for (pk, &j) in self.kc.iter().enumerate() {
            let row = self.minv.row(pk);
            self.x[j] = row.iter().zip(&rhs).fold(S::zero(), |acc, (&b, &r)| acc + b * r);
        }
        for r in 0..m {
            self.s[r] = if self.rnpos[r] == NONE {
                let row = &self.p.rows[r];
                row.terms.iter().fold(-row.rhs, |acc, &(j, a)| acc + a * self.x[j])
            } else {
                S::zero()
            };
        }
        let mut y = vec![S::zero(); m];
        for (pk, &j) in self.kc.iter().enumerate() {
            let cb = self.cost(j);
            if cb != S::zero() {
                for (&r, &v) in self.rn.iter().zip(self.minv.row(pk)) {
                    y[r] = y[r] + cb * v;
                }
            }
        }
        for j in 0..n {
            self.d[j] = if self.kpos[j] == NONE {
                self.cols[j].iter().fold(self.cost(j), |acc, &(r, a)| acc - y[r] * a)
            } else {
                S::zero()
            };
        }
        for r in 0..m {
            self.d[n + r] = y[r];
        }
    }

    /// `M⁻¹` times the tight-row part of structural column `q`.
    fn ftran(&self, q: usize) -> Vec<S> {
        let k = self.k();
        let mut w = vec![S::zero(); k];
        for &(r, a) in &self.cols[q] {
            let i = self.rnpos[r];
            if i != NONE {
                for pk in 0..k {
                    w[pk] = w[pk] + self.minv.at(pk, i) * a;
                }
            }
        }
        w
    }

    /// Basic-structural part of row `r` times `M⁻¹`.
    fn row_times_minv(&self, r: usize) -> Vec<S> {
        let k = self.k();
        let mut z = vec![S::zero(); k];
        for &(j, a) in &self.p.rows[r].terms {
            let pk = self.kpos[j];
            if pk != NONE {
                for (zi, &v) in z.iter_mut().zip(self.minv.row(pk)) {
                    *zi = *zi + a * v;
                }
            }
        }
        z
    }

    /// Structural `q` replaces basic structural `pk`.
    fn swap_column(&mut self, pk: usize, q: usize, w: &[S]) {
        let piv = w[pk];
        self.minv.row_mut(pk).iter_mut().for_each(|v| *v = *v / piv);
        let pivot_row = self.minv.row(pk).to_vec();
        let mut f = w.to_vec();
        f[pk] = S::zero();
        self.minv.rank_one(&f, &pivot_row);
        self.kpos[self.kc[pk]] = NONE;
        self.kc[pk] = q;
        self.kpos[q] = pk;
    }

    /// Basic structural `pk` leaves and tight row `rn[ti]` gets a basic slack.
    fn shrink(&mut self, pk: usize, ti: usize) {
        let h = self.minv.at(pk, ti);
        let f: Vec<S> = self.minv.col(ti).into_iter().map(|v| v / h).collect();
        let mut g = self.minv.row(pk).to_vec();
        g[ti] = S::zero();
        let mut f = f;
        f[pk] = S::zero();
        self.minv.rank_one(&f, &g);
        self.minv.swap_remove(pk, ti);
        self.kpos[self.kc[pk]] = NONE;
        self.rnpos[self.rn[ti]] = NONE;
        self.kc.swap_remove(pk);
        self.rn.swap_remove(ti);
        if let Some(&j) = self.kc.get(pk) {
            self.kpos[j] = pk;
        }
        if let Some(&r) = self.rn.get(ti) {
            self.rnpos[r] = ti;
        }
    }

    /// Slack of row `s` leaves and structural `q` enters, growing `M`.
    fn grow(&mut self, s: usize, q: usize, w: &[S]) {
        let k = self.k();
        let z = self.row_times_minv(s);
        let a_sq = self.p.rows[s].terms.iter().filter(|t| t.0 == q).fold(S::zero(), |acc, t| acc + t.1);
        let c_w = self.p.rows[s]
            .terms
            .iter()
            .filter(|t| self.kpos[t.0] != NONE)
            .fold(S::zero(), |acc, &(j, a)| acc + a * w[self.kpos[j]]);
        let sigma = a_sq - c_w;
        let f: Vec<S> = w.iter().map(|&v| -v / sigma).collect();
        self.minv.rank_one(&f, &z);
        self.minv.push();
        for (i, &fi) in f.iter().enumerate() {
            self.minv.row_mut(i)[k] = fi;
        }
        let last = self.minv.row_mut(k);
        for (c, &zc) in z.iter().enumerate() {
            last[c] = -zc / sigma;
        }
        last[k] = S::one() / sigma;
        self.kpos[q] = k;
        self.kc.push(q);
        self.rnpos[s] = k;
        self.rn.push(s);
    }

    /// Slack of row `s` leaves and the slack of tight row `rn[ti]` enters.
    fn swap_row(&mut self, s: usize, ti: usize) {
        let mut z = self.row_times_minv(s);
        let gamma = z[ti];
        z[ti] = z[ti] - S::one();
        let f: Vec<S> = self.minv.col(ti).into_iter().map(|v| v / gamma).collect();
        self.minv.rank_one(&f, &z);
        self.rnpos[self.rn[ti]] = NONE;
        self.rn[ti] = s;
        self.rnpos[s] = ti;
    }

    fn run(&mut self, cfg: &DualSimplex) -> LpStatus {
        for j in 0..self.n {
            if self.p.lower[j] > self.p.upper[j] + S::feas_tol() {
                return LpStatus::Infeasible;
            }
        }
        let feas = S::feas_tol();
        let opt = S::opt_tol();
        let piv_tol = S::pivot_tol();
        let (n, m) = (self.n, self.m);
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        let mut rho = vec![S::zero(); m];
        let mut u = vec![S::zero(); m];
        let mut alpha = vec![S::zero(); n + m];
        // Whether values and reduced costs were just rebuilt from scratch.
        let mut fresh = true;
        loop {
            let bland = degenerate_run >= cfg.bland_after;
            // Leaving variable: most infeasible basic one, or the smallest
            // index under Bland's rule. Variables are numbered structurals
            // first, then slacks.
            let mut leave: Option<(usize, S)> = None;
            let mut consider = |v: usize, delta: S| {
                let better = match leave {
                    None => true,
                    Some((u, du)) => {
                        if bland {
                            v < u
                        } else {
                            delta.abs() > du.abs()
                        }
                    }
                };
                if better {
                    leave = Some((v, delta));
                }
            };
            for &j in &self.kc {
                let v = self.x[j];
                if v < self.p.lower[j] - feas {
                    consider(j, v - self.p.lower[j]);
                } else if v > self.p.upper[j] + feas {
                    consider(j, v - self.p.upper[j]);
                }
            }
            for r in 0..m {
                if self.rnpos[r] == NONE && self.s[r] < -feas {
                    consider(n + r, self.s[r]);
                }
            }
            let Some((lv, delta)) = leave else {
                if fresh {
                    return LpStatus::Optimal;
                }
                if !self.refactor() {
                    return LpStatus::IterationLimit;
                }
                self.recompute();
                since_refactor = 0;
                fresh = true;
                continue;
            };
            if self.pivots >= cfg.max_pivots {
                return LpStatus::IterationLimit;
            }
            if self.pivots % 32 == 0 && cfg.deadline.is_some_and(|d| Instant::now() >= d) {
                return LpStatus::IterationLimit;
            }

            rho.iter_mut().for_each(|v| *v = S::zero());
            if lv < n {
                let pk = self.kpos[lv];
                for (&r, &v) in self.rn.iter().zip(self.minv.row(pk)) {
                    rho[r] = v;
                }
            } else {
                let z = self.row_times_minv(lv - n);
                for (i, &r) in self.rn.iter().enumerate() {
                    rho[r] = z[i];
                }
                rho[lv - n] = -S::one();
            }
            let below = delta < S::zero();
            // Pivot row over the nonbasic variables.
            for j in 0..n {
                if self.kpos[j] == NONE {
                    alpha[j] = self.cols[j].iter().fold(S::zero(), |acc, &(r, c)| acc + rho[r] * c);
                }
            }
            for &r in &self.rn {
                alpha[n + r] = -rho[r];
            }
            // Candidates move the leaving variable towards its violated bound.
            let mut best: Option<(usize, S, S)> = None;
            let mut offer = |v: usize, a: S, up: bool, dv: S| {
                if a.abs() <= piv_tol {
                    return;
                }
                let eligible = if below { (!up && a < S::zero()) || (up && a > S::zero()) } else { (!up && a > S::zero()) || (up && a < S::zero()) };
                if !eligible {
                    return;
                }
                let ratio = (dv / a).abs();
                let take = match best {
                    None => true,
                    Some((q, rq, aq)) => {
                        if bland {
                            ratio < rq - opt || (ratio <= rq + opt && v < q)
                        } else {
                            ratio < rq - opt || (ratio <= rq + opt && a.abs() > aq.abs())
                        }
                    }
                };
                if take {
                    best = Some((v, ratio, a));
                }
            };
            for j in 0..n {
                if self.kpos[j] != NONE || self.p.upper[j] - self.p.lower[j] <= feas {
                    continue;
                }
                offer(j, alpha[j], self.at_upper[j], self.d[j]);
            }
            for &r in &self.rn {
                offer(n + r, alpha[n + r], false, self.d[n + r]);
            }
            let Some((q, ratio, aq)) = best else {
                if fresh {
                    return LpStatus::Infeasible;
                }
                // Confirm on a rebuilt inverse before declaring infeasibility.
                if !self.refactor() {
                    return LpStatus::IterationLimit;
                }
                self.recompute();
                since_refactor = 0;
                fresh = true;
                continue;
            };
            if ratio <= opt {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            // Entering column in the current basis: `w` over basic
            // structurals, `u` over rows with a basic slack.
            let w: Vec<S> = if q < n {
                self.ftran(q)
            } else {
                let ti = self.rnpos[q - n];
                self.minv.col(ti).into_iter().map(|v| -v).collect()
            };
            u.iter_mut().for_each(|v| *v = S::zero());
            for (pk, &j) in self.kc.iter().enumerate() {
                if w[pk] != S::zero() {
                    for &(r, a) in &self.cols[j] {
                        u[r] = u[r] + a * w[pk];
                    }
                }
            }
            if q < n {
                for &(r, a) in &self.cols[q] {
                    u[r] = u[r] - a;
                }
            }

            let theta_d = self.d[q] / aq;
            for j in 0..n {
                if self.kpos[j] == NONE {
                    self.d[j] = self.d[j] - theta_d * alpha[j];
                }
            }
            for &r in &self.rn {
                self.d[n + r] = self.d[n + r] - theta_d * alpha[n + r];
            }
            self.d[q] = S::zero();
            self.d[lv] = -theta_d;

            let theta_p = delta / aq;
            for (pk, &j) in self.kc.iter().enumerate() {
                self.x[j] = self.x[j] - theta_p * w[pk];
            }
            for r in 0..m {
                if self.rnpos[r] == NONE {
                    self.s[r] = self.s[r] - theta_p * u[r];
                }
            }
            if q < n {
                self.x[q] = self.x[q] + theta_p;
            } else {
                self.s[q - n] = theta_p;
            }
            if lv < n {
                self.x[lv] = if below { self.p.lower[lv] } else { self.p.upper[lv] };
                self.at_upper[lv] = !below;
            } else {
                self.s[lv - n] = S::zero();
            }

            match (lv < n, q < n) {
                (true, true) => self.swap_column(self.kpos[lv], q, &w),
                (true, false) => self.shrink(self.kpos[lv], self.rnpos[q - n]),
                (false, true) => self.grow(lv - n, q, &w),
                (false, false) => self.swap_row(lv - n, self.rnpos[q - n]),
            }
            self.pivots += 1;
            since_refactor += 1;
            fresh = false;
            // A rebuild costs about `k` updates, so space them accordingly.
            if since_refactor >= cfg.refactor_every.max(self.k() / 2) {
                if !self.refactor() {
                    return LpStatus::IterationLimit;
                }
                self.recompute();
                since_refactor = 0;
                fresh = true;
            }
        }
    }

    fn finish(self, status: LpStatus) -> LpSolution<S> {
        let primal: Vec<S> = (0..self.n).map(|j| self.x[j].max(self.p.lower[j]).min(self.p.upper[j])).collect();
        let reduced_costs = (0..self.n).map(|j| -self.d[j]).collect();
        let basic = self
            .kc
            .iter()
            .map(|&j| BasicVar::Col(j))
            .chain((0..self.m).filter(|&r| self.rnpos[r] == NONE).map(BasicVar::Row))
            .collect();
        let factor: Arc<dyn Any + Send + Sync> = Arc::new(Factor { rn: self.rn, minv: self.minv });
        let basis = Basis { basic, at_upper: self.at_upper, factor: Some(factor) };
        let objective = self.p.objective_value(&primal);
        LpSolution { status, objective, primal, reduced_costs, basis, pivots: self.pivots }
    }
}

/// Translates a model's active cuts and fixings into an [`LpProblem`].
pub fn model_problem<S: Scalar>(model: &CpModel<S>) -> LpProblem<S> {
    let bounds = model.bounds();
    let rows = model
        .active_cuts
        .iter()
        .map(|cut| LpRow {
            terms: cut
                .terms()
                .iter()
                .map(|&(p, c)| (model.var_of(p).expect("cut pairs lie in the variable scope"), S::of(c)))
                .collect(),
            rhs: S::of(cut.rhs()),
        })
        .collect();
    LpProblem {
        objective: model.objective().to_vec(),
        constant: model.constant(),
        lower: bounds.iter().map(|b| b.0).collect(),
        upper: bounds.iter().map(|b| b.1).collect(),
        rows,
    }
}

/// Solves the relaxation defined by the model's current cuts and fixings.
pub fn solve_lp<S: Scalar>(model: &CpModel<S>, warm_start: Option<&Basis>) -> LpSolution<S> {
    DualSimplex::default().solve(&model_problem(model), warm_start)
}

/// Separation loop limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationLimits {
    pub max_rounds: usize,
    pub cuts_per_round: usize,
}

impl Default for SeparationLimits {
    fn default() -> Self {
        Self { max_rounds: 50, cuts_per_round: 500 }
    }
}

/// Alternates solve and separation on `model` until no retained constraint
/// is violated or the round limit is hit. Returns the last solution and the
/// objective after every round.
pub fn separate_to_fixpoint<S: Scalar>(
    model: &mut CpModel<S>,
    limits: SeparationLimits,
) -> (LpSolution<S>, Vec<S>) {
    separate_until(model, limits, None)
}

/// [`separate_to_fixpoint`] that stops at `deadline`. A round cut short
/// by the deadline is dropped in favour of the last completed one, whose
/// value is still a valid bound.
pub fn separate_until<S: Scalar>(
    model: &mut CpModel<S>,
    limits: SeparationLimits,
    deadline: Option<Instant>,
) -> (LpSolution<S>, Vec<S>) {
    let mut backend = DualSimplex::with_deadline(deadline);
    let mut basis: Option<Basis> = None;
    let mut last: Option<LpSolution<S>> = None;
    let mut trace = Vec::new();
    let mut round = 0;
    loop {
        let sol = backend.solve(&model_problem(model), basis.as_ref());
        if sol.status == LpStatus::IterationLimit {
            if let Some(prev) = last {
                return (prev, trace);
            }
        }
        trace.push(sol.objective);
        let timed_out = deadline.is_some_and(|d| Instant::now() >= d);
        if sol.status != LpStatus::Optimal || round >= limits.max_rounds || timed_out {
            return (sol, trace);
        }
        let cuts = model.separate_violations(&sol.primal, limits.cuts_per_round);
        if cuts.is_empty() {
            return (sol, trace);
        }
        model.active_cuts.extend(cuts);
        basis = Some(sol.basis.clone());
        last = Some(sol);
        round += 1;
    }
}

/// Root relaxation bound of a graph: the LP value at separation fixpoint,
/// always at least the clique-partitioning optimum.
pub fn lp_upper_bound<S: Scalar>(g: &WeightedGraph<S>) -> S {
    lp_upper_bound_with(g, SeparationLimits::default())
}

pub fn lp_upper_bound_with<S: Scalar>(g: &WeightedGraph<S>, limits: SeparationLimits) -> S {
    lp_upper_bound_until(g, limits, None)
}

/// Like [`lp_upper_bound_with`], falling back to the trivial bound when no
/// relaxation finishes before `deadline`.
pub fn lp_upper_bound_until<S: Scalar>(g: &WeightedGraph<S>, limits: SeparationLimits, deadline: Option<Instant>) -> S {
    let mut model = CpModel::build(g);
    let (sol, _) = separate_until(&mut model, limits, deadline);
    match sol.status {
        LpStatus::Optimal => sol.objective,
        _ => g.trivial_upper_bound(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cut, Pair};

    fn box_problem(c: &[f64]) -> LpProblem<f64> {
        LpProblem {
            objective: c.to_vec(),
            constant: 0.0,
            lower: vec![0.0; c.len()],
            upper: vec![1.0; c.len()],
            rows: Vec::new(),
        }
    }

    #[test]
    fn unconstrained_box_sits_at_preferred_bounds() {
        let p = box_problem(&[-2.0, 3.0, -1.0]);
        let s = DualSimplex::default().solve(&p, None);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.primal, vec![0.0, 1.0, 0.0]);
        assert_eq!(s.objective, 3.0);
        assert_eq!(s.reduced_costs, vec![-2.0, 3.0, -1.0]);
    }

    #[test]
    fn simple_constrained_problem() {
        // max x0 + x1 s.t. -x0 - x1 >= -1.5
        let mut p = box_problem(&[1.0, 1.0]);
        p.rows.push(LpRow { terms: vec![(0, -1.0), (1, -1.0)], rhs: -1.5 });
        let s = DualSimplex::default().solve(&p, None);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_rows_detected() {
        // x0 + x1 >= 3 with both in [0, 1].
        let mut p = box_problem(&[1.0, 1.0]);
        p.rows.push(LpRow { terms: vec![(0, 1.0), (1, 1.0)], rhs: 3.0 });
        assert_eq!(DualSimplex::default().solve(&p, None).status, LpStatus::Infeasible);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let mut p = box_problem(&[1.0]);
        p.lower[0] = 1.0;
        p.upper[0] = 0.0;
        assert_eq!(DualSimplex::default().solve(&p, None).status, LpStatus::Infeasible);
    }

    #[test]
    fn slack_cut_at_preferred_point() {
        // Only w_12 > 0: optimum puts x_12 at 0 and the cut x01 + x02 >= x12 is slack.
        let g = WeightedGraph::<f64>::from_edges(3, [(1, 2, 2.0), (0, 1, -1.0), (0, 2, -1.0)]).unwrap();
        let mut model = CpModel::build(&g);
        model.active_cuts.push(Cut::transitivity(0, 1, 2));
        let s = solve_lp(&model, None);
        let x12 = s.primal[model.var_of(Pair::new(1, 2)).unwrap()];
        assert_eq!(x12, 0.0);
        assert_eq!(s.objective, 2.0);
    }

    #[test]
    fn warm_start_after_adding_rows_matches_cold() {
        let mut p = box_problem(&[1.0, 2.0, -1.0, 0.5]);
        p.rows.push(LpRow { terms: vec![(0, -1.0), (1, -1.0)], rhs: -1.0 });
        let first = DualSimplex::default().solve(&p, None);
        p.rows.push(LpRow { terms: vec![(1, -1.0), (3, -1.0)], rhs: -0.5 });
        p.rows.push(LpRow { terms: vec![(2, 1.0), (0, 1.0)], rhs: 0.25 });
        let warm = DualSimplex::default().solve(&p, Some(&first.basis));
        let cold = DualSimplex::default().solve(&p, None);
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.objective - cold.objective).abs() < 1e-9);
    }

    #[test]
    fn all_positive_graph_bound_is_weight_sum() {
        let g = WeightedGraph::<f64>::from_edges(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (0, 3, 0.5)])
            .unwrap();
        assert_eq!(lp_upper_bound(&g), 6.5);
    }

    #[test]
    fn all_negative_graph_bound_is_loop_sum() {
        let g = WeightedGraph::<f64>::from_edges(3, [(0, 1, -1.0), (1, 2, -2.0), (1, 1, 4.0)]).unwrap();
        assert_eq!(lp_upper_bound(&g), 4.0);
    }
}
