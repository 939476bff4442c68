//! Greedy cluster growth by scalarized objective gain.

use super::state::{ClusterState, UNASSIGNED};
use super::topology::components;
use super::{ClusterProblem, ClusterSolution, PartitionError};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Result of [`greedy_grow`].
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub solution: ClusterSolution,
    /// Nodes that could not be appended within the area bound (or were not
    /// reachable from any cluster); they were attached to the lowest-id
    /// adjacent cluster, or to cluster 0 if none is adjacent.
    pub leftovers: Vec<usize>,
}

/// Seeds `m` clusters (one per connected component first, then random
/// nodes) and repeatedly appends the unassigned frontier node with the
/// greatest `λ·Δf1 + (1−λ)·Δf2`, never exceeding the area bound. Ties go to
/// the lowest node, then the lowest cluster.
pub fn greedy_grow(problem: &ClusterProblem, m: usize, lambda: f64, seed: u64) -> Result<GreedyOutcome, PartitionError> {
    let n = problem.node_count();
    if m == 0 || m > n {
        return Err(PartitionError::InfeasibleM { m, nodes: n, components: components(&problem.graph).len() });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(PartitionError::InvalidParameter(format!("lambda {lambda} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = pick_seeds(problem, m, &mut rng);
    let mut state = ClusterState::empty(problem, m);
    let mut frontier: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for (c, &s) in seeds.iter().enumerate() {
        state.add(s, c);
    }
    for (c, &s) in seeds.iter().enumerate() {
        frontier[c].extend(problem.graph.neighbors(s).iter().copied().filter(|&v| state.assignment[v] == UNASSIGNED));
    }
    let limit = problem.area_limit();
    let mut best: Vec<Option<(f64, usize)>> = vec![None; m];
    let mut dirty = vec![true; m];
    loop {
        for c in 0..m {
            if !dirty[c] {
                continue;
            }
            dirty[c] = false;
            best[c] = None;
            let (acf0, spec0) = (state.cluster_acf(c), state.cluster_spec(c));
            let candidates: Vec<usize> = frontier[c].iter().copied().collect();
            for v in candidates {
                if state.area(c) + problem.ts[v] > limit {
                    continue;
                }
                let (a, s) = state.terms_with(c, v, 1.0);
                let gain = (lambda * (a - acf0) + (1.0 - lambda) * (s - spec0)) / m as f64;
                // Frontier iterates in ascending node order, so only a
                // strictly larger gain replaces the incumbent.
                if best[c].is_none_or(|(g, _)| gain > g) {
                    best[c] = Some((gain, v));
                }
            }
        }
        let pick = (0..m)
            .filter_map(|c| best[c].map(|(g, v)| (g, v, c)))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)));
        let Some((_, v, c)) = pick else { break };
        state.add(v, c);
        dirty[c] = true;
        for other in 0..m {
            if frontier[other].remove(&v) && best[other].is_some_and(|(_, b)| b == v) {
                dirty[other] = true;
            }
        }
        for &x in problem.graph.neighbors(v) {
            if state.assignment[x] == UNASSIGNED {
                frontier[c].insert(x);
            }
        }
    }
    let leftovers: Vec<usize> = (0..n).filter(|&u| state.assignment[u] == UNASSIGNED).collect();
    let mut assignment = state.assignment;
    attach_leftovers(problem, &mut assignment);
    Ok(GreedyOutcome { solution: ClusterSolution::evaluate(problem, assignment, m), leftovers })
}

/// One seed per connected component (a random node of it) while clusters
/// remain, then distinct random nodes.
pub(crate) fn pick_seeds(problem: &ClusterProblem, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut seeds = Vec::with_capacity(m);
    for comp in components(&problem.graph) {
        if seeds.len() == m {
            break;
        }
        seeds.push(*comp.choose(rng).expect("components are nonempty"));
    }
    let mut rest: Vec<usize> = (0..problem.node_count()).filter(|u| !seeds.contains(u)).collect();
    rest.shuffle(rng);
    seeds.extend(rest.into_iter().take(m - seeds.len()));
    seeds
}

/// Assigns every unassigned node to its lowest-id adjacent cluster,
/// spreading outward; nodes with no assigned neighbor anywhere end in
/// cluster 0.
pub(crate) fn attach_leftovers(problem: &ClusterProblem, assignment: &mut [usize]) {
    loop {
        let mut changed = false;
        for u in 0..assignment.len() {
            if assignment[u] != UNASSIGNED {
                continue;
            }
            if let Some(c) =
                problem.graph.neighbors(u).iter().map(|&v| assignment[v]).filter(|&c| c != UNASSIGNED).min()
            {
                assignment[u] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for a in assignment.iter_mut().filter(|a| **a == UNASSIGNED) {
        *a = 0;
    }
}
