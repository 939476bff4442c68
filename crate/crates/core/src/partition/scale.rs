//! Cluster-scale estimation: the smallest number of clusters for which the
//! fast solver returns a feasible partition.

use super::{ClusterProblem, ClusterSolution, PartitionError};

/// Outcome of [`estimate_cluster_scale`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleEstimate {
    /// Chosen number of clusters `M*`.
    pub clusters: usize,
    /// The fast solver's feasible solution at `M*` (singletons on fallback).
    pub solution: ClusterSolution,
    /// True when no `M` in the open window `(⌈Σts/L⌉, N)` was feasible and
    /// every node became its own cluster.
    pub fallback: bool,
    /// Values of `M` tried, in order.
    pub tried: Vec<usize>,
}

/// First `M` in the search window.
pub fn lower_bound(problem: &ClusterProblem) -> usize {
    (problem.total_area() / problem.max_area).ceil() as usize + 1
}

/// Linear search from `⌈Σts/L⌉ + 1` upward, stopping below `N`; solver errors
/// count as infeasible. The search is linear because feasibility is not
/// monotone in `M` under the connectivity constraint.
pub fn estimate_cluster_scale<F>(problem: &ClusterProblem, mut fast_solver: F) -> ScaleEstimate
where
    F: FnMut(usize) -> Result<ClusterSolution, PartitionError>,
{
    let n = problem.node_count();
    let mut tried = Vec::new();
    for m in lower_bound(problem).max(1)..n {
        tried.push(m);
        match fast_solver(m) {
            Ok(solution) if solution.feasible => {
                return ScaleEstimate { clusters: m, solution, fallback: false, tried };
            }
            Ok(_) => {}
            Err(e) => log::debug!("scale search: M = {m} failed: {e}"),
        }
    }
    log::warn!("no feasible cluster count below N = {n}; falling back to singletons");
    ScaleEstimate { clusters: n, solution: ClusterSolution::singletons(problem), fallback: true, tried }
}

#[cfg(test)]
mod tests {
    use super::super::{d_balance, ClusterProblem};
    use super::*;
    use crate::graph::AggregatableGraph;
    use std::collections::BTreeSet;

    fn path(n: usize, area: f64) -> ClusterProblem {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        let g = AggregatableGraph::from_edges(n, &edges, BTreeSet::new());
        let series = (0..n).map(|i| (0..48).map(|t| ((t + i) % 3) as f64).collect()).collect();
        ClusterProblem::new(g, series, vec![area; n], vec![0.0; n], 5.0, 24).unwrap()
    }

    #[test]
    fn small_total_area_starts_at_two() {
        let p = path(4, 1.0);
        let est = estimate_cluster_scale(&p, |m| d_balance(&p, m, 0.05, 0));
        assert_eq!(est.clusters, 2);
        assert!(!est.fallback);
        assert_eq!(est.tried, vec![2]);
    }

    #[test]
    fn window_start_for_hundred_square_km() {
        let p = path(40, 2.5);
        assert_eq!(lower_bound(&p), 21);
    }

    #[test]
    fn three_nodes_of_four_km2_fall_back() {
        // Any merge exceeds 5 km², and the window (⌈12/5⌉, 3) = (3, 3) is
        // empty, so the result is M* = N = 3 with the fallback flag.
        let p = path(3, 4.0);
        let est = estimate_cluster_scale(&p, |m| d_balance(&p, m, 0.05, 0));
        assert_eq!(est.clusters, 3);
        assert!(est.fallback);
        assert!(est.solution.feasible);
    }

    #[test]
    fn minimal_among_window() {
        let p = path(6, 2.0);
        let est = estimate_cluster_scale(&p, |m| d_balance(&p, m, 0.05, 0));
        // Window starts at ⌈12/5⌉ + 1 = 4, which is feasible (2+2+1+1 nodes).
        assert_eq!(est.clusters, 4);
        assert_eq!(est.tried, vec![4]);
        assert!(!d_balance(&p, 2, 0.05, 0).unwrap().feasible);
    }
}
