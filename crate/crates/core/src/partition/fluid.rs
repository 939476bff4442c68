//! Fluid-communities propagation with a fixed number of communities.

use super::greedy::{attach_leftovers, pick_seeds};
use super::repair::repair_connectivity;
use super::state::UNASSIGNED;
use super::topology::components;
use super::{ClusterProblem, ClusterSolution, PartitionError};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sweep limit for [`fluid_grow`].
pub const MAX_SWEEPS: usize = 100;

/// Two community scores closer than this are treated as tied.
const TIE_TOLERANCE: f64 = 1e-4;

/// Result of [`fluid_grow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FluidOutcome {
    pub solution: ClusterSolution,
    /// False when the sweep limit was reached before a sweep without change.
    pub converged: bool,
    pub sweeps: usize,
}

/// `m` communities start from seeds (one per connected component first)
/// with density `1/size`. Each sweep visits nodes in random order; a node
/// scores every community by the summed density over itself and its
/// neighbors, keeps its community if it is among the best, and otherwise
/// joins a random best one. The last member of a community never leaves.
/// Disconnected communities are repaired afterwards.
pub fn fluid_grow(problem: &ClusterProblem, m: usize, seed: u64) -> Result<FluidOutcome, PartitionError> {
    let n = problem.node_count();
    if m == 0 || m > n {
        return Err(PartitionError::InfeasibleM { m, nodes: n, components: components(&problem.graph).len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = pick_seeds(problem, m, &mut rng);
    let mut assignment = vec![UNASSIGNED; n];
    let mut size = vec![0usize; m];
    for (c, &s) in seeds.iter().enumerate() {
        assignment[s] = c;
        size[c] = 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut converged = false;
    let mut sweeps = 0;
    let mut scores = vec![0.0; m];
    let mut touched: Vec<usize> = Vec::new();
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            touched.clear();
            for &u in std::iter::once(&v).chain(problem.graph.neighbors(v)) {
                let c = assignment[u];
                if c == UNASSIGNED {
                    continue;
                }
                if scores[c] == 0.0 {
                    touched.push(c);
                }
                scores[c] += 1.0 / size[c] as f64;
            }
            if touched.is_empty() {
                continue;
            }
            let max = touched.iter().map(|&c| scores[c]).fold(f64::MIN, f64::max);
            let mut best: Vec<usize> = touched.iter().copied().filter(|&c| max - scores[c] < TIE_TOLERANCE).collect();
            best.sort_unstable();
            for &c in &touched {
                scores[c] = 0.0;
            }
            let cur = assignment[v];
            if cur != UNASSIGNED && (best.contains(&cur) || size[cur] == 1) {
                continue;
            }
            let next = *best.choose(&mut rng).expect("nonempty best set");
            if cur != UNASSIGNED {
                size[cur] -= 1;
            }
            assignment[v] = next;
            size[next] += 1;
            changed = true;
        }
        if !changed && assignment.iter().all(|&c| c != UNASSIGNED) {
            converged = true;
            break;
        }
    }
    attach_leftovers(problem, &mut assignment);
    repair_connectivity(&problem.graph, &mut assignment, m, &problem.weights, &problem.ts, problem.max_area);
    Ok(FluidOutcome { solution: ClusterSolution::evaluate(problem, assignment, m), converged, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AggregatableGraph;
    use std::collections::BTreeSet;

    fn problem(n: usize, edges: &[(usize, usize)]) -> ClusterProblem {
        let g = AggregatableGraph::from_edges(n, edges, BTreeSet::new());
        let series = (0..n).map(|i| (0..48).map(|t| ((t * 7 + i) % 4) as f64).collect()).collect();
        ClusterProblem::new(g, series, vec![0.1; n], vec![0.05; n], 5.0, 24).unwrap()
    }

    #[test]
    fn single_community_takes_everything() {
        let p = problem(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let out = fluid_grow(&p, 1, 4).unwrap();
        assert!(out.converged);
        assert_eq!(out.solution.assignment, vec![0; 5]);
    }

    #[test]
    fn two_cliques_split_cleanly() {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for u in base..base + 4 {
                for v in u + 1..base + 4 {
                    edges.push((u, v));
                }
            }
        }
        let p = problem(8, &edges);
        for seed in 0..10 {
            let out = fluid_grow(&p, 2, seed).unwrap();
            let a = &out.solution.assignment;
            assert!(a[..4].iter().all(|&c| c == a[0]) && a[4..].iter().all(|&c| c == a[4]));
            assert_ne!(a[0], a[4]);
            assert!(out.solution.feasible);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let edges: Vec<(usize, usize)> = (1..12).map(|i| (i - 1, i)).chain([(0, 6), (3, 9)]).collect();
        let p = problem(12, &edges);
        assert_eq!(fluid_grow(&p, 3, 7).unwrap(), fluid_grow(&p, 3, 7).unwrap());
    }
}
