//! Exhaustive reference solver over all set partitions.
//!
//! Partitions are enumerated as restricted-growth strings in lexicographic
//! order: `a[0] = 0` and `a[v] <= 1 + max(a[..v])`.

use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::scalar::Scalar;

/// Largest node count the oracle accepts. Bell(12) = 4,213,597.
pub const MAX_ORACLE_NODES: usize = 12;

/// Bell number B(n) via the Bell triangle.
pub fn bell_number(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let prev = *next.last().unwrap();
            next.push(prev + x);
        }
        row = next;
    }
    row[0]
}

/// Calls `visit` with every restricted-growth string of length `n`.
pub fn for_each_partition(n: usize, mut visit: impl FnMut(&[usize])) {
    if n == 0 {
        visit(&[]);
        return;
    }
    let mut a = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        visit(&a);
        // Find rightmost position that can be incremented.
        let mut pos = n - 1;
        loop {
            if pos == 0 {
                return;
            }
            if a[pos] <= maxes[pos - 1] {
                break;
            }
            pos -= 1;
        }
        a[pos] += 1;
        maxes[pos] = maxes[pos - 1].max(a[pos]);
        for k in pos + 1..n {
            a[k] = 0;
            maxes[k] = maxes[pos];
        }
    }
}

/// Exact optimum of the clique-partitioning objective. Ties resolve to the
/// lexicographically first restricted-growth string.
pub fn brute_force_optimum<S: Scalar>(g: &WeightedGraph<S>) -> Result<(S, Partition)> {
    brute_force_filtered(g, |_| true)
        .map(|best| best.expect("the all-singletons partition always qualifies"))
}

/// Like [`brute_force_optimum`] but only over partitions accepted by
/// `admit`. Returns `None` when no partition qualifies.
pub fn brute_force_filtered<S: Scalar>(
    g: &WeightedGraph<S>,
    mut admit: impl FnMut(&[usize]) -> bool,
) -> Result<Option<(S, Partition)>> {
    let n = g.node_count();
    if n > MAX_ORACLE_NODES {
        return Err(Error::TooLarge(n, MAX_ORACLE_NODES));
    }
    let mut dense = vec![S::zero(); n * n];
    for (i, j, w) in g.pair_edges() {
        dense[i * n + j] = w;
        dense[j * n + i] = w;
    }
    let base = g.self_loop_total();
    let mut search = Enumerator {
        n,
        dense: &dense,
        assignment: vec![0; n],
        best: None,
        admit: &mut admit,
    };
    if n == 0 {
        return Ok(Some((base, Partition::singletons(0))));
    }
    search.descend(1, 1, base);
    Ok(search.best.map(|(w, a)| (w, Partition::from_assignment(&a))))
}

struct Enumerator<'a, S, F> {
    n: usize,
    dense: &'a [S],
    assignment: Vec<usize>,
    best: Option<(S, Vec<usize>)>,
    admit: &'a mut F,
}

impl<S: Scalar, F: FnMut(&[usize]) -> bool> Enumerator<'_, S, F> {
    fn descend(&mut self, v: usize, used: usize, acc: S) {
        if v == self.n {
            if !(self.admit)(&self.assignment) {
                return;
            }
            let better = match &self.best {
                None => true,
                Some((w, _)) => acc > *w,
            };
            if better {
                self.best = Some((acc, self.assignment.clone()));
            }
            return;
        }
        let mut gain = vec![S::zero(); used + 1];
        let row = &self.dense[v * self.n..v * self.n + v];
        for (u, &w) in row.iter().enumerate() {
            if w != S::zero() {
                let c = self.assignment[u];
                gain[c] = gain[c] + w;
            }
        }
        for c in 0..=used {
            self.assignment[v] = c;
            let next_used = if c == used { used + 1 } else { used };
            self.descend(v + 1, next_used, acc + gain[c]);
        }
        self.assignment[v] = 0;
    }
}
