//! Connectivity queries on node subsets of the aggregatable graph.

use crate::graph::AggregatableGraph;
use std::collections::{HashMap, VecDeque};

/// Connected components of the whole graph, each sorted, ordered by lowest
/// node.
pub fn components(graph: &AggregatableGraph) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..graph.node_count()).collect();
    connected_components_of(graph, &all)
}

/// Connected components of the subgraph induced by `nodes`, each sorted,
/// ordered by lowest node.
pub fn connected_components_of(graph: &AggregatableGraph, nodes: &[usize]) -> Vec<Vec<usize>> {
    let mut index: HashMap<usize, usize> = HashMap::with_capacity(nodes.len());
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for (k, &v) in sorted.iter().enumerate() {
        index.insert(v, k);
    }
    let mut seen = vec![false; sorted.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..sorted.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(k) = queue.pop_front() {
            let u = sorted[k];
            comp.push(u);
            for v in graph.neighbors(u) {
                if let Some(&j) = index.get(v) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Articulation points of the subgraph induced by `nodes` (Tarjan, iterative).
/// A node whose removal disconnects its own induced component is reported.
pub fn articulation_points(graph: &AggregatableGraph, nodes: &[usize]) -> Vec<usize> {
    let mut index: HashMap<usize, usize> = HashMap::with_capacity(nodes.len());
    for (k, &v) in nodes.iter().enumerate() {
        index.insert(v, k);
    }
    let n = nodes.len();
    let local: Vec<Vec<usize>> =
        nodes.iter().map(|&u| graph.neighbors(u).iter().filter_map(|v| index.get(v).copied()).collect()).collect();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_cut = vec![false; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut root_children = 0;
        // (node, parent, next neighbor position)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        while let Some(&mut (u, parent, ref mut pos)) = stack.last_mut() {
            if *pos < local[u].len() {
                let v = local[u][*pos];
                *pos += 1;
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    if u == root {
                        root_children += 1;
                    }
                    stack.push((v, u, 0));
                } else if v != parent {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if parent != usize::MAX {
                    low[parent] = low[parent].min(low[u]);
                    if parent != root && low[u] >= disc[parent] {
                        is_cut[parent] = true;
                    }
                }
            }
        }
        if root_children > 1 {
            is_cut[root] = true;
        }
    }
    let mut out: Vec<usize> = (0..n).filter(|&k| is_cut[k]).map(|k| nodes[k]).collect();
    out.sort_unstable();
    out
}
