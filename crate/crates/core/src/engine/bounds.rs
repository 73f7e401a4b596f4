use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::heuristic::{heuristic_run, HeuristicConfig};
use std::time::Instant;

use crate::lp::{lp_upper_bound_until, SeparationLimits};
use crate::scalar::Scalar;

/// Denominators at or below this use the absolute gap criterion.
pub const GAP_EPS: f64 = 1e-12;
/// Absolute closeness accepted as "no gap" when the bound is not positive.
pub const ABS_GAP_TOL: f64 = 1e-9;

/// Best within-cluster weight of a three-node graph with the given pair
/// weights (loops excluded).
fn triangle_optimum<S: Scalar>(a: S, b: S, c: S) -> S {
    let zero = S::zero();
    [zero, a, b, c, a + b + c].into_iter().fold(S::neg_infinity(), S::max)
}

/// Upper bound from a greedy packing of edge-disjoint mixed-sign triangles.
///
/// A triangle with both signs can never collect all of its positive
/// weight, so replacing its positive sum by its exact three-node optimum
/// keeps the bound valid while tightening it. Remaining positive edges and
/// all self-loops are counted in full.
pub fn upper_bound_subnetwork<S: Scalar>(g: &WeightedGraph<S>) -> S {
    let n = g.node_count();
    let mut candidates: Vec<(S, [usize; 3], S)> = Vec::new();
    for i in 0..n {
        for &(j, wij) in g.neighbors(i) {
            if j <= i {
                continue;
            }
            for &(k, wjk) in g.neighbors(j) {
                if k <= j {
                    continue;
                }
                let wik = g.weight(i, k);
                if wik == S::zero() {
                    continue;
                }
                let ws = [wij, wik, wjk];
                let pos = ws.iter().filter(|w| **w > S::zero()).count();
                if pos == 0 || pos == 3 {
                    continue;
                }
                let opt = triangle_optimum(wij, wik, wjk);
                let pos_sum = ws.iter().filter(|w| **w > S::zero()).fold(S::zero(), |a, &w| a + w);
                let gain = pos_sum - opt;
                if gain > S::zero() {
                    candidates.push((gain, [i, j, k], opt));
                }
            }
        }
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut used = std::collections::HashSet::new();
    let mut bound = g.trivial_upper_bound();
    for (gain, [i, j, k], _) in candidates {
        let es = [(i, j), (i, k), (j, k)];
        if es.iter().any(|e| used.contains(e)) {
            continue;
        }
        used.extend(es);
        bound = bound - gain;
    }
    bound
}

/// Relative optimality gap `(b - i) / b`, or the absolute criterion when
/// `b` is not positive.
pub fn compute_gap<S: Scalar>(bound: S, incumbent: S) -> Result<S> {
    let scale = S::one().max(bound.abs());
    if bound < incumbent - S::obj_tol() * scale {
        return Err(Error::Inconsistent(format!("bound {bound} below incumbent {incumbent}")));
    }
    let diff = (bound - incumbent).max(S::zero());
    if bound > S::of(GAP_EPS) {
        Ok(diff / bound)
    } else if diff <= S::of(ABS_GAP_TOL) {
        Ok(S::zero())
    } else {
        Ok(S::one())
    }
}

#[derive(Clone, Debug)]
pub struct RootBounds<S> {
    pub lower: S,
    pub partition: Partition,
    pub upper: S,
}

/// Heuristic lower bound and the tighter of the subnetwork and root LP
/// upper bounds.
pub fn root_bounds<S: Scalar>(
    g: &WeightedGraph<S>,
    heuristic: &HeuristicConfig,
    separation: SeparationLimits,
) -> RootBounds<S> {
    root_bounds_until(g, heuristic, separation, None)
}

/// [`root_bounds`] with the LP part cut off at `deadline`.
pub fn root_bounds_until<S: Scalar>(
    g: &WeightedGraph<S>,
    heuristic: &HeuristicConfig,
    separation: SeparationLimits,
    deadline: Option<Instant>,
) -> RootBounds<S> {
    let run = heuristic_run(g, heuristic);
    let lp = lp_upper_bound_until(g, separation, deadline);
    let upper = upper_bound_subnetwork(g).min(lp).max(run.objective);
    RootBounds { lower: run.objective, partition: run.partition, upper }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert!((compute_gap(100.0, 95.0).unwrap() - 0.05f64).abs() < 1e-15);
        assert_eq!(compute_gap(7.0, 7.0).unwrap(), 0.0);
        assert_eq!(compute_gap(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(compute_gap(0.0, -1.0).unwrap(), 1.0);
        assert!(compute_gap(1.0, 2.0).is_err());
    }

    #[test]
    fn subnetwork_all_positive_is_sum() {
        let g = WeightedGraph::<f64>::from_edges(3, [(0, 1, 1.0), (0, 2, 2.0), (1, 2, 3.0)]).unwrap();
        assert_eq!(upper_bound_subnetwork(&g), 6.0);
    }

    #[test]
    fn subnetwork_single_mixed_triangle_is_exact() {
        let g = WeightedGraph::<f64>::from_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, -1.0)]).unwrap();
        assert_eq!(upper_bound_subnetwork(&g), 1.0);
    }
}
