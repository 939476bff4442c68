//! Incrementally maintained per-cluster aggregates.

use super::{cluster_specificity, ClusterProblem};
use crate::metrics::objective_acf;

pub(crate) const UNASSIGNED: usize = usize::MAX;

/// Cluster series sums, areas and per-cluster objective terms for an
/// assignment that may still have unassigned nodes.
#[derive(Debug, Clone)]
pub(crate) struct ClusterState<'a> {
    pub problem: &'a ClusterProblem,
    pub assignment: Vec<usize>,
    pub m: usize,
    sums: Vec<Vec<f64>>,
    ts: Vec<f64>,
    vs: Vec<f64>,
    size: Vec<usize>,
    acf: Vec<f64>,
    spec: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> ClusterState<'a> {
    pub fn empty(problem: &'a ClusterProblem, m: usize) -> Self {
        let t = problem.intervals();
        Self {
            problem,
            assignment: vec![UNASSIGNED; problem.node_count()],
            m,
            sums: vec![vec![0.0; t]; m],
            ts: vec![0.0; m],
            vs: vec![0.0; m],
            size: vec![0; m],
            acf: vec![0.0; m],
            spec: vec![0.0; m],
            scratch: vec![0.0; t],
        }
    }

    /// State of a total assignment into `0..m`.
    pub fn from_assignment(problem: &'a ClusterProblem, assignment: &[usize], m: usize) -> Self {
        let mut s = Self::empty(problem, m);
        for (u, &c) in assignment.iter().enumerate() {
            s.assignment[u] = c;
            s.size[c] += 1;
            s.ts[c] += problem.ts[u];
            s.vs[c] += problem.vs[u];
            for (acc, v) in s.sums[c].iter_mut().zip(&problem.series[u]) {
                *acc += v;
            }
        }
        for c in 0..m {
            s.refresh(c);
        }
        s
    }

    fn refresh(&mut self, c: usize) {
        self.acf[c] = objective_acf(&self.sums[c], self.problem.lag);
        self.spec[c] = cluster_specificity(self.vs[c], self.ts[c]);
    }

    pub fn add(&mut self, u: usize, c: usize) {
        debug_assert_eq!(self.assignment[u], UNASSIGNED);
        self.assignment[u] = c;
        self.size[c] += 1;
        self.ts[c] += self.problem.ts[u];
        self.vs[c] += self.problem.vs[u];
        for (acc, v) in self.sums[c].iter_mut().zip(&self.problem.series[u]) {
            *acc += v;
        }
        self.refresh(c);
    }

    pub fn remove(&mut self, u: usize) {
        let c = self.assignment[u];
        debug_assert_ne!(c, UNASSIGNED);
        self.assignment[u] = UNASSIGNED;
        self.size[c] -= 1;
        if self.size[c] == 0 {
            // Reset exactly so an emptied cluster carries no rounding residue.
            self.ts[c] = 0.0;
            self.vs[c] = 0.0;
            self.sums[c].iter_mut().for_each(|v| *v = 0.0);
        } else {
            self.ts[c] -= self.problem.ts[u];
            self.vs[c] -= self.problem.vs[u];
            for (acc, v) in self.sums[c].iter_mut().zip(&self.problem.series[u]) {
                *acc -= v;
            }
        }
        self.refresh(c);
    }

    pub fn move_node(&mut self, u: usize, to: usize) {
        self.remove(u);
        self.add(u, to);
    }

    pub fn area(&self, c: usize) -> f64 {
        self.ts[c]
    }

    pub fn size(&self, c: usize) -> usize {
        self.size[c]
    }

    pub fn f1(&self) -> f64 {
        self.acf.iter().sum::<f64>() / self.m as f64
    }

    pub fn f2(&self) -> f64 {
        self.spec.iter().sum::<f64>() / self.m as f64
    }

    pub fn cluster_acf(&self, c: usize) -> f64 {
        self.acf[c]
    }

    pub fn cluster_spec(&self, c: usize) -> f64 {
        self.spec[c]
    }

    /// Cluster `c`'s ACF and specificity if `u` joined (`sign = 1`) or left
    /// (`sign = -1`) it.
    pub fn terms_with(&mut self, c: usize, u: usize, sign: f64) -> (f64, f64) {
        let p = self.problem;
        if sign < 0.0 && self.size[c] == 1 {
            return (0.0, 0.0);
        }
        for ((out, acc), v) in self.scratch.iter_mut().zip(&self.sums[c]).zip(&p.series[u]) {
            *out = acc + sign * v;
        }
        let a = objective_acf(&self.scratch, p.lag);
        let s = cluster_specificity(self.vs[c] + sign * p.vs[u], self.ts[c] + sign * p.ts[u]);
        (a, s)
    }

    /// Change of `(f1, f2)` if the assigned node `u` moved to cluster `to`.
    pub fn delta_move(&mut self, u: usize, to: usize) -> (f64, f64) {
        let from = self.assignment[u];
        let (a_from, s_from) = self.terms_with(from, u, -1.0);
        let (a_to, s_to) = self.terms_with(to, u, 1.0);
        let m = self.m as f64;
        (
            (a_from + a_to - self.acf[from] - self.acf[to]) / m,
            (s_from + s_to - self.spec[from] - self.spec[to]) / m,
        )
    }
}
