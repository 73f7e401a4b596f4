#![allow(dead_code)]

use cliquepart::lp::LpProblem;
use cliquepart::WeightedGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random signed graph: each pair is an edge with probability `p`, weights
/// drawn from `{-k..=k} \ {0}`.
pub fn random_signed_graph(seed: u64, n: usize, p: f64, k: i32) -> WeightedGraph<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                let mut w = 0;
                while w == 0 {
                    w = rng.gen_range(-k..=k);
                }
                edges.push((i, j, w as f64));
            }
        }
    }
    WeightedGraph::from_edges(n, edges).unwrap()
}

pub enum TableauOutcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
}

/// Textbook two-phase tableau simplex with Bland's rule, written
/// independently of the library's solver. Solves
/// `max c·x, A x = b, x >= 0` with `b >= 0`.
fn tableau_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> TableauOutcome {
    let m = a.len();
    let nv = c.len();
    let width = nv + m + 1;
    let rhs = width - 1;
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        t[i][..nv].copy_from_slice(&a[i]);
        t[i][nv + i] = 1.0;
        t[i][rhs] = b[i];
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    let mut phase1 = vec![0.0; nv + m];
    for v in &mut phase1[nv..] {
        *v = -1.0;
    }
    let all: Vec<bool> = vec![true; nv + m];
    run(&mut t, &mut basis, &phase1, &all);
    let infeas: f64 = basis.iter().enumerate().filter(|(_, &v)| v >= nv).map(|(i, _)| t[i][rhs]).sum();
    if infeas > 1e-8 {
        return TableauOutcome::Infeasible;
    }
    // Pivot zero-level artificials out where possible.
    for i in 0..m {
        if basis[i] >= nv {
            if let Some(j) = (0..nv).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut phase2 = vec![0.0; nv + m];
    phase2[..nv].copy_from_slice(c);
    let mut allowed = vec![false; nv + m];
    for v in &mut allowed[..nv] {
        *v = true;
    }
    run(&mut t, &mut basis, &phase2, &allowed);
    let mut x = vec![0.0; nv];
    for (i, &v) in basis.iter().enumerate() {
        if v < nv {
            x[v] = t[i][rhs];
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    TableauOutcome::Optimal { objective, x }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, q: usize) {
    let p = t[r][q];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[q];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = q;
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], obj: &[f64], allowed: &[bool]) {
    let rhs = t[0].len() - 1;
    loop {
        let entering = (0..obj.len()).filter(|&j| allowed[j] && !basis.contains(&j)).find(|&j| {
            let z: f64 = basis.iter().enumerate().map(|(i, &v)| obj[v] * t[i][j]).sum();
            obj[j] - z > 1e-10
        });
        let Some(q) = entering else { return };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.len() {
            if t[i][q] > 1e-10 {
                let ratio = t[i][rhs] / t[i][q];
                let better = match leave {
                    None => true,
                    Some((k, best)) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis[i] < basis[k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave.expect("boxed problems are bounded");
        pivot(t, basis, r, q);
    }
}

/// Solves an [`LpProblem`] with the tableau oracle by shifting every
/// variable to its lower bound and turning bounds and rows into equalities.
pub fn oracle_solve(p: &LpProblem<f64>) -> TableauOutcome {
    let n = p.var_count();
    let m = p.rows.len();
    let nv = n + n + m;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for j in 0..n {
        if p.upper[j] < p.lower[j] {
            return TableauOutcome::Infeasible;
        }
        let mut row = vec![0.0; nv];
        row[j] = 1.0;
        row[n + j] = 1.0;
        a.push(row);
        b.push(p.upper[j] - p.lower[j]);
    }
    for (r, lp_row) in p.rows.iter().enumerate() {
        let mut row = vec![0.0; nv];
        let mut rhs = lp_row.rhs;
        for &(j, c) in &lp_row.terms {
            row[j] += c;
            rhs -= c * p.lower[j];
        }
        row[2 * n + r] = -1.0;
        if rhs < 0.0 {
            for v in &mut row {
                *v = -*v;
            }
            rhs = -rhs;
        }
        a.push(row);
        b.push(rhs);
    }
    let mut c = vec![0.0; nv];
    c[..n].copy_from_slice(&p.objective);
    match tableau_max(&a, &b, &c) {
        TableauOutcome::Infeasible => TableauOutcome::Infeasible,
        TableauOutcome::Optimal { x, .. } => {
            let x: Vec<f64> = (0..n).map(|j| x[j] + p.lower[j]).collect();
            let objective = p.objective_value(&x);
            TableauOutcome::Optimal { objective, x }
        }
    }
}
