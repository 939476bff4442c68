//! Pareto co-optimization of predictability (mean daily ACF) and
//! specificity by boundary-node moves.
//!
//! Each outer iteration picks the best-predictability member of the Pareto
//! set with probability `w` (otherwise the best-specificity member),
//! enumerates its legal boundary moves once, and evaluates them one by one;
//! every evaluation consumes one unit of the move budget `eps`.

use crate::partition::{
    articulation_points, check_feasible, ClusterProblem, ClusterSolution, ClusterState, PartitionError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashSet;
use thiserror::Error;

/// Objective ties closer than this are treated as equal.
pub const DOMINANCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("no feasible initial solution")]
    EmptyInitialSet,
    #[error("invalid optimizer setting: {0}")]
    InvalidConfig(String),
    #[error("move of node {node} from cluster {from} to {to} is not legal")]
    IllegalMove { node: usize, from: usize, to: usize },
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Probability of refining the best-predictability solution.
    pub w: f64,
    /// Budget of move evaluations.
    pub eps: usize,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(w: f64, eps: usize, seed: u64) -> Self {
        Self { w, eps, seed }
    }

    fn validate(&self) -> Result<(), OptimizeError> {
        if !(0.0..=1.0).contains(&self.w) {
            return Err(OptimizeError::InvalidConfig(format!("w = {} outside [0, 1]", self.w)));
        }
        if self.eps == 0 {
            return Err(OptimizeError::InvalidConfig("eps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Reassignment of `node` from `source` to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BoundaryMove {
    pub node: usize,
    pub source: usize,
    pub target: usize,
}

/// Every move of a node into the cluster of a neighbor that keeps the
/// solution feasible: the source cluster keeps at least one node and stays
/// connected, and the target stays within the area bound. Sorted by
/// `(node, target)`, one entry per pair.
pub fn movable_boundary(x: &ClusterSolution, problem: &ClusterProblem) -> Vec<BoundaryMove> {
    let state = ClusterState::from_assignment(problem, &x.assignment, x.m);
    boundary_of(&state)
}

fn boundary_of(state: &ClusterState) -> Vec<BoundaryMove> {
    let problem = state.problem;
    let m = state.m;
    let mut members = vec![Vec::new(); m];
    for (u, &c) in state.assignment.iter().enumerate() {
        members[c].push(u);
    }
    let mut cut = vec![false; problem.node_count()];
    for nodes in &members {
        if nodes.len() > 2 {
            for a in articulation_points(&problem.graph, nodes) {
                cut[a] = true;
            }
        }
    }
    let limit = problem.area_limit();
    let mut moves = Vec::new();
    for (u, &is_cut) in cut.iter().enumerate() {
        let source = state.assignment[u];
        if members[source].len() <= 1 || is_cut {
            continue;
        }
        let mut targets: Vec<usize> = problem
            .graph
            .neighbors(u)
            .iter()
            .map(|&v| state.assignment[v])
            .filter(|&t| t != source && state.area(t) + problem.ts[u] <= limit)
            .collect();
        targets.sort_unstable();
        targets.dedup();
        moves.extend(targets.into_iter().map(|target| BoundaryMove { node: u, source, target }));
    }
    moves
}

/// Applies a legal move, returning the new solution and the exact change in
/// `(f1, f2)`; only the two touched clusters are re-scored.
pub fn apply_move(
    x: &ClusterSolution,
    mv: BoundaryMove,
    problem: &ClusterProblem,
) -> Result<(ClusterSolution, f64, f64), OptimizeError> {
    let mut state = ClusterState::from_assignment(problem, &x.assignment, x.m);
    if !boundary_of(&state).contains(&mv) {
        return Err(OptimizeError::IllegalMove { node: mv.node, from: mv.source, to: mv.target });
    }
    let (d1, d2) = state.delta_move(mv.node, mv.target);
    state.move_node(mv.node, mv.target);
    let next = solution_from_state(&state);
    Ok((next, d1, d2))
}

fn solution_from_state(state: &ClusterState) -> ClusterSolution {
    let p = state.problem;
    let violations = check_feasible(&state.assignment, state.m, &p.graph, &p.ts, p.max_area);
    ClusterSolution {
        m: state.m,
        assignment: state.assignment.clone(),
        f1: state.f1(),
        f2: state.f2(),
        feasible: violations.is_empty(),
        violations,
    }
}

/// Which objective an outer iteration refined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Predictability,
    Specificity,
}

/// One row of the convergence trace, written after each outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    /// Move evaluations consumed so far.
    pub epoch: usize,
    /// Outer iteration number, from 1.
    pub iteration: usize,
    pub selected: Objective,
    pub pareto_size: usize,
    pub best_acf: f64,
    pub best_specificity: f64,
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    BudgetExhausted,
    NoImprovement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    /// Mutually non-dominated feasible solutions, by decreasing `f1`.
    pub pareto: Vec<ClusterSolution>,
    pub trace: Vec<TraceRow>,
    /// Move evaluations performed.
    pub evaluations: usize,
    pub stop: StopReason,
}

impl OptimizeOutcome {
    pub fn best_acf(&self) -> &ClusterSolution {
        best_by(&self.pareto, Objective::Predictability).expect("nonempty Pareto set")
    }

    pub fn best_specificity(&self) -> &ClusterSolution {
        best_by(&self.pareto, Objective::Specificity).expect("nonempty Pareto set")
    }
}

/// Best member for one objective; ties go to the better other objective,
/// then the lower index.
fn best_by(set: &[ClusterSolution], obj: Objective) -> Option<&ClusterSolution> {
    let key = |s: &ClusterSolution| match obj {
        Objective::Predictability => (s.f1, s.f2),
        Objective::Specificity => (s.f2, s.f1),
    };
    let mut best: Option<&ClusterSolution> = None;
    for s in set {
        if best.is_none_or(|b| {
            let (a, b) = (key(s), key(b));
            a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
        }) {
            best = Some(s);
        }
    }
    best
}

/// `a` dominates `b`: no worse in both objectives and better in one.
pub fn dominates(a: &ClusterSolution, b: &ClusterSolution) -> bool {
    let t = DOMINANCE_TOLERANCE;
    a.f1 >= b.f1 - t && a.f2 >= b.f2 - t && (a.f1 > b.f1 + t || a.f2 > b.f2 + t)
}

/// Drops dominated members and duplicate assignments (up to relabeling),
/// keeping first occurrences.
pub fn prune(set: Vec<ClusterSolution>) -> Vec<ClusterSolution> {
    let mut seen = HashSet::new();
    let unique: Vec<ClusterSolution> = set.into_iter().filter(|s| seen.insert(s.canonical_assignment())).collect();
    unique.iter().filter(|s| !unique.iter().any(|o| dominates(o, s))).cloned().collect()
}

/// Runs the co-optimization from the feasible members of `initial`.
pub fn co_optimize(
    initial: Vec<ClusterSolution>,
    cfg: &OptimizerConfig,
    problem: &ClusterProblem,
) -> Result<OptimizeOutcome, OptimizeError> {
    cfg.validate()?;
    let feasible: Vec<ClusterSolution> = initial.into_iter().filter(|s| s.feasible).collect();
    let mut set = prune(feasible);
    if set.is_empty() {
        return Err(OptimizeError::EmptyInitialSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Record trackers start at zero, not at the initial set's best values,
    // so early moves from a selected solution are recorded even when an
    // initial solution is already better.
    let mut best_acf = 0.0_f64;
    let mut best_spec = 0.0_f64;
    let mut budget = cfg.eps;
    let mut evaluations = 0;
    let mut trace = Vec::new();
    let mut stalled = [false, false];
    let mut iteration = 0;
    let stop = loop {
        if budget == 0 {
            break StopReason::BudgetExhausted;
        }
        let done_f1 = stalled[0] || cfg.w == 0.0;
        let done_f2 = stalled[1] || cfg.w == 1.0;
        if done_f1 && done_f2 {
            break StopReason::NoImprovement;
        }
        iteration += 1;
        let p: f64 = rng.random();
        let selected = if p < cfg.w { Objective::Predictability } else { Objective::Specificity };
        let x = best_by(&set, selected).expect("nonempty").clone();
        let mut state = ClusterState::from_assignment(problem, &x.assignment, x.m);
        let boundary = boundary_of(&state);
        let (mut cur_f1, mut cur_f2) = (x.f1, x.f2);
        let mut accepted_any = false;
        // Once a move has been kept, later snapshot moves are re-checked
        // against the current state before evaluation.
        let mut chained = false;
        for mv in boundary {
            if budget == 0 {
                break;
            }
            if chained && !move_still_legal(&state, mv) {
                continue;
            }
            budget -= 1;
            evaluations += 1;
            let (d1, d2) = state.delta_move(mv.node, mv.target);
            let (f1, f2) = (cur_f1 + d1, cur_f2 + d2);
            if !(f1 > best_acf || f2 > best_spec) {
                continue;
            }
            state.move_node(mv.node, mv.target);
            let sol = solution_from_state(&state);
            debug_assert!(sol.feasible, "legal moves keep feasibility: {:?}", sol.violations);
            best_acf = best_acf.max(sol.f1);
            best_spec = best_spec.max(sol.f2);
            let improves_selected = match selected {
                Objective::Predictability => sol.f1 > cur_f1,
                Objective::Specificity => sol.f2 > cur_f2,
            };
            let (nf1, nf2) = (sol.f1, sol.f2);
            set.push(sol);
            accepted_any = true;
            if improves_selected {
                cur_f1 = nf1;
                cur_f2 = nf2;
                chained = true;
            } else {
                state.move_node(mv.node, mv.source);
            }
        }
        set = prune(set);
        if accepted_any {
            stalled = [false, false];
        } else {
            stalled[match selected {
                Objective::Predictability => 0,
                Objective::Specificity => 1,
            }] = true;
        }
        trace.push(TraceRow {
            epoch: evaluations,
            iteration,
            selected,
            pareto_size: set.len(),
            best_acf: set.iter().map(|s| s.f1).fold(f64::MIN, f64::max),
            best_specificity: set.iter().map(|s| s.f2).fold(f64::MIN, f64::max),
        });
    };
    set.sort_by(|a, b| b.f1.total_cmp(&a.f1).then(b.f2.total_cmp(&a.f2)));
    Ok(OptimizeOutcome { pareto: set, trace, evaluations, stop })
}

/// Re-checks a snapshot move against the current (chained) state.
fn move_still_legal(state: &ClusterState, mv: BoundaryMove) -> bool {
    let p = state.problem;
    if state.assignment[mv.node] != mv.source || state.size(mv.source) <= 1 {
        return false;
    }
    if !p.graph.neighbors(mv.node).iter().any(|&v| state.assignment[v] == mv.target) {
        return false;
    }
    if state.area(mv.target) + p.ts[mv.node] > p.area_limit() {
        return false;
    }
    let members: Vec<usize> = (0..p.node_count()).filter(|&v| state.assignment[v] == mv.source).collect();
    !articulation_points(&p.graph, &members).contains(&mv.node)
}
