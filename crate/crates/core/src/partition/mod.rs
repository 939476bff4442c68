//! Clustering of non-standalone atomic elements into connected,
//! area-bounded clusters: the problem definition, solution scoring and
//! feasibility checks, cluster-scale estimation and the three initial
//! solvers (data-balanced multilevel partitioning, greedy growth and fluid
//! propagation).

mod dbalance;
mod fluid;
mod greedy;
mod repair;
mod scale;
mod state;
mod topology;

pub use dbalance::{d_balance, d_balance_assignment, imbalance, BalanceOptions};
pub use fluid::{fluid_grow, FluidOutcome, MAX_SWEEPS};
pub use greedy::{greedy_grow, GreedyOutcome};
pub use repair::repair_connectivity;
pub use scale::{estimate_cluster_scale, ScaleEstimate};
pub(crate) use state::ClusterState;
pub use topology::{articulation_points, components, connected_components_of};

use crate::graph::{AggregatableGraph, AtomicElement};
use crate::metrics::{objective_acf, MetricsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack when comparing cluster areas against the maximum area.
pub const AREA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("cannot form {m} clusters from {nodes} nodes in {components} connected components")]
    InfeasibleM { m: usize, nodes: usize, components: usize },
    #[error("problem has no nodes")]
    EmptyProblem,
    #[error("input lengths differ: {0}")]
    LengthMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Everything the clustering objectives and constraints need, over nodes
/// `0..n` (standalone elements already removed).
#[derive(Debug, Clone)]
pub struct ClusterProblem {
    pub graph: AggregatableGraph,
    pub series: Vec<Vec<f64>>,
    pub ts: Vec<f64>,
    pub vs: Vec<f64>,
    /// Balancing weight per node: total demand, with zero replaced by one.
    pub weights: Vec<f64>,
    pub max_area: f64,
    pub lag: usize,
}

impl ClusterProblem {
    pub fn new(
        graph: AggregatableGraph,
        series: Vec<Vec<f64>>,
        ts: Vec<f64>,
        vs: Vec<f64>,
        max_area: f64,
        lag: usize,
    ) -> Result<Self, PartitionError> {
        let n = graph.node_count();
        if n == 0 {
            return Err(PartitionError::EmptyProblem);
        }
        if series.len() != n || ts.len() != n || vs.len() != n {
            return Err(PartitionError::LengthMismatch(format!(
                "graph {n}, series {}, ts {}, vs {}",
                series.len(),
                ts.len(),
                vs.len()
            )));
        }
        let t = series[0].len();
        if series.iter().any(|s| s.len() != t) {
            return Err(PartitionError::LengthMismatch("series lengths differ".into()));
        }
        if lag == 0 || lag >= t {
            return Err(PartitionError::Metrics(MetricsError::LagTooLarge { lag, len: t }));
        }
        if !(max_area > 0.0) {
            return Err(PartitionError::InvalidParameter(format!("max area {max_area}")));
        }
        if ts.iter().zip(&vs).any(|(t, v)| !(*t >= 0.0) || !(*v >= 0.0) || v > t) {
            return Err(PartitionError::InvalidParameter("need 0 <= vs <= ts".into()));
        }
        let weights = series
            .iter()
            .map(|s| {
                let w: f64 = s.iter().sum();
                if w > 0.0 {
                    w
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { graph, series, ts, vs, weights, max_area, lag })
    }

    /// Restricts `graph` to its non-standalone nodes. Returns the problem and
    /// the element position of each problem node.
    pub fn from_elements(
        elements: &[AtomicElement],
        graph: &AggregatableGraph,
        max_area: f64,
        lag: usize,
    ) -> Result<(Self, Vec<usize>), PartitionError> {
        let keep: Vec<usize> = (0..elements.len()).filter(|i| !graph.standalone.contains(i)).collect();
        let mut local = vec![usize::MAX; elements.len()];
        for (k, &i) in keep.iter().enumerate() {
            local[i] = k;
        }
        let edges: Vec<(usize, usize)> = graph
            .edges()
            .into_iter()
            .filter(|&(u, v)| local[u] != usize::MAX && local[v] != usize::MAX)
            .map(|(u, v)| (local[u], local[v]))
            .collect();
        let sub = AggregatableGraph::from_edges(keep.len(), &edges, Default::default());
        let problem = Self::new(
            sub,
            keep.iter().map(|&i| elements[i].series.clone()).collect(),
            keep.iter().map(|&i| elements[i].ts_km2).collect(),
            keep.iter().map(|&i| elements[i].vs_km2).collect(),
            max_area,
            lag,
        )?;
        Ok((problem, keep))
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn intervals(&self) -> usize {
        self.series[0].len()
    }

    pub fn total_area(&self) -> f64 {
        self.ts.iter().sum()
    }

    pub(crate) fn area_limit(&self) -> f64 {
        self.max_area * (1.0 + AREA_TOLERANCE)
    }
}

/// One way a solution breaks the clustering constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Node without a cluster in `0..m`.
    Unassigned { node: usize },
    EmptyCluster { cluster: usize },
    AreaExceeded { cluster: usize, area_km2: f64 },
    /// Cluster whose members induce several connected pieces.
    Disconnected { cluster: usize, fragments: usize },
}

/// Constraint check of an assignment into clusters `0..m`.
pub fn check_feasible(
    assignment: &[usize],
    m: usize,
    graph: &AggregatableGraph,
    areas: &[f64],
    max_area: f64,
) -> Vec<Violation> {
    let n = graph.node_count();
    let mut out = Vec::new();
    for node in 0..n {
        if assignment.get(node).is_none_or(|&c| c >= m) {
            out.push(Violation::Unassigned { node });
        }
    }
    if !out.is_empty() {
        return out;
    }
    let mut members = vec![Vec::new(); m];
    for (i, &c) in assignment.iter().enumerate().take(n) {
        members[c].push(i);
    }
    let limit = max_area * (1.0 + AREA_TOLERANCE);
    for (c, nodes) in members.iter().enumerate() {
        if nodes.is_empty() {
            out.push(Violation::EmptyCluster { cluster: c });
            continue;
        }
        let area: f64 = nodes.iter().map(|&i| areas[i]).sum();
        if area > limit {
            out.push(Violation::AreaExceeded { cluster: c, area_km2: area });
        }
        let fragments = connected_components_of(graph, nodes).len();
        if fragments > 1 {
            out.push(Violation::Disconnected { cluster: c, fragments });
        }
    }
    out
}

/// An assignment of every node to one of `m` clusters with its objective
/// values and constraint report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSolution {
    #[serde(rename = "M")]
    pub m: usize,
    pub assignment: Vec<usize>,
    /// Mean daily autocorrelation over clusters (flat clusters score 0).
    pub f1: f64,
    /// Mean specificity over clusters.
    pub f2: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl ClusterSolution {
    /// Scores `assignment` and checks every constraint. Entries outside
    /// `0..m` are reported as unassigned and score nothing.
    pub fn evaluate(problem: &ClusterProblem, assignment: Vec<usize>, m: usize) -> Self {
        let violations = check_feasible(&assignment, m, &problem.graph, &problem.ts, problem.max_area);
        let (f1, f2) = objectives(problem, &assignment, m);
        Self { m, assignment, f1, f2, feasible: violations.is_empty(), violations }
    }

    /// Every node in its own cluster.
    pub fn singletons(problem: &ClusterProblem) -> Self {
        let n = problem.node_count();
        Self::evaluate(problem, (0..n).collect(), n)
    }

    /// Canonical relabeling: clusters numbered by first occurrence.
    pub fn canonical_assignment(&self) -> Vec<usize> {
        canonical(&self.assignment)
    }

    /// Members of each cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (i, &c) in self.assignment.iter().enumerate() {
            if c < self.m {
                out[c].push(i);
            }
        }
        out
    }
}

pub(crate) fn canonical(assignment: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

/// `(f1, f2)` of an assignment, computed from scratch.
pub fn objectives(problem: &ClusterProblem, assignment: &[usize], m: usize) -> (f64, f64) {
    if m == 0 {
        return (0.0, 0.0);
    }
    let t = problem.intervals();
    let mut sums = vec![vec![0.0; t]; m];
    let mut ts = vec![0.0; m];
    let mut vs = vec![0.0; m];
    for (i, &c) in assignment.iter().enumerate() {
        if c >= m {
            continue;
        }
        for (acc, v) in sums[c].iter_mut().zip(&problem.series[i]) {
            *acc += v;
        }
        ts[c] += problem.ts[i];
        vs[c] += problem.vs[i];
    }
    let f1 = sums.iter().map(|s| objective_acf(s, problem.lag)).sum::<f64>() / m as f64;
    let f2 = ts.iter().zip(&vs).map(|(t, v)| cluster_specificity(*v, *t)).sum::<f64>() / m as f64;
    (f1, f2)
}

/// Serviced share of a cluster; an empty cluster scores 0.
pub(crate) fn cluster_specificity(vs: f64, ts: f64) -> f64 {
    if ts > 0.0 {
        vs / ts
    } else {
        0.0
    }
}
