//! Data-balanced multilevel graph partitioning.
//!
//! Each connected component receives a share of the `m` parts (at least
//! enough to respect the area bound, the rest by data weight). Components
//! are partitioned independently: heavy-edge matching coarsens the graph,
//! several seeded greedy k-way growings produce initial partitions on the
//! coarsest level, and boundary moves refine the partition on every level
//! while keeping parts connected. The refinement objective is
//! lexicographic: area excess over the bound, then weight excess over the
//! balance cap, then edge cut. A connectivity repair pass runs last.

use super::repair::repair_connectivity;
use super::topology::components;
use super::{ClusterProblem, ClusterSolution, PartitionError};
use crate::graph::AggregatableGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap, VecDeque};

/// Tuning knobs for [`d_balance_assignment`].
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceOptions {
    /// Allowed relative excess of the heaviest part over `total / m`.
    pub imbalance: f64,
    /// Maximum total area per part, if areas are to be respected.
    pub max_area: Option<f64>,
    /// Independent initial partitions tried on the coarsest level.
    pub trials: usize,
    pub seed: u64,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self { imbalance: 0.05, max_area: None, trials: 8, seed: 0 }
    }
}

/// `max part weight / (total / m)`.
pub fn imbalance(assignment: &[usize], weights: &[f64], m: usize) -> f64 {
    let mut part = vec![0.0; m];
    for (u, &c) in assignment.iter().enumerate() {
        part[c] += weights[u];
    }
    let total: f64 = part.iter().sum();
    part.iter().fold(0.0, |a: f64, &b| a.max(b)) / (total / m as f64)
}

/// Balanced partition of the problem's graph into `m` clusters, scored.
pub fn d_balance(
    problem: &ClusterProblem,
    m: usize,
    imbalance: f64,
    seed: u64,
) -> Result<ClusterSolution, PartitionError> {
    let opts = BalanceOptions { imbalance, max_area: Some(problem.max_area), seed, ..Default::default() };
    let assignment = d_balance_assignment(&problem.graph, &problem.weights, &problem.ts, m, &opts)?;
    Ok(ClusterSolution::evaluate(problem, assignment, m))
}

/// Partition of `graph` into `m` parts balanced by `weights`.
pub fn d_balance_assignment(
    graph: &AggregatableGraph,
    weights: &[f64],
    areas: &[f64],
    m: usize,
    opts: &BalanceOptions,
) -> Result<Vec<usize>, PartitionError> {
    let n = graph.node_count();
    let comps = components(graph);
    if m == 0 || m > n || m < comps.len() {
        return Err(PartitionError::InfeasibleM { m, nodes: n, components: comps.len() });
    }
    if weights.len() != n || areas.len() != n {
        return Err(PartitionError::LengthMismatch(format!("{n} nodes, {} weights, {} areas", weights.len(), areas.len())));
    }
    let weights: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { w } else { 1.0 }).collect();
    let total: f64 = weights.iter().sum();
    let cap = (1.0 + opts.imbalance) * total / m as f64;
    let max_area = opts.max_area.unwrap_or(f64::INFINITY);
    let alloc = allocate_parts(&comps, &weights, areas, m, max_area);
    let mut assignment = vec![0usize; n];
    let mut offset = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for (comp, &k) in comps.iter().zip(&alloc) {
        let local = partition_component(graph, comp, &weights, areas, k, cap, max_area, opts.trials, &mut rng);
        for (i, &u) in comp.iter().enumerate() {
            assignment[u] = offset + local[i];
        }
        offset += k;
    }
    repair_connectivity(graph, &mut assignment, m, &weights, areas, max_area);
    Ok(assignment)
}

/// Parts per component: one each, then enough to cover each component's
/// area, then the remainder by largest weight shortfall.
fn allocate_parts(comps: &[Vec<usize>], weights: &[f64], areas: &[f64], m: usize, max_area: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let sizes: Vec<usize> = comps.iter().map(Vec::len).collect();
    let mut alloc = vec![1usize; comps.len()];
    let mut budget = m - comps.len();
    let need: Vec<usize> = comps
        .iter()
        .map(|c| {
            let a: f64 = c.iter().map(|&u| areas[u]).sum();
            if max_area.is_finite() {
                ((a / max_area).ceil() as usize).max(1)
            } else {
                1
            }
        })
        .collect();
    let share: Vec<f64> =
        comps.iter().map(|c| m as f64 * c.iter().map(|&u| weights[u]).sum::<f64>() / total).collect();
    // Area needs first, most-constrained component first.
    while budget > 0 {
        let pick = (0..comps.len())
            .filter(|&i| alloc[i] < need[i].min(sizes[i]))
            .max_by(|&a, &b| (need[a] - alloc[a]).cmp(&(need[b] - alloc[b])).then(b.cmp(&a)));
        let Some(i) = pick else { break };
        alloc[i] += 1;
        budget -= 1;
    }
    while budget > 0 {
        let pick = (0..comps.len())
            .filter(|&i| alloc[i] < sizes[i])
            .max_by(|&a, &b| (share[a] - alloc[a] as f64).total_cmp(&(share[b] - alloc[b] as f64)).then(b.cmp(&a)));
        let Some(i) = pick else { break };
        alloc[i] += 1;
        budget -= 1;
    }
    alloc
}

/// Weighted graph at one multilevel stage.
#[derive(Debug, Clone)]
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    weight: Vec<f64>,
    area: Vec<f64>,
}

impl Level {
    fn len(&self) -> usize {
        self.weight.len()
    }
}

#[allow(clippy::too_many_arguments)]
fn partition_component(
    graph: &AggregatableGraph,
    comp: &[usize],
    weights: &[f64],
    areas: &[f64],
    k: usize,
    cap: f64,
    max_area: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = comp.len();
    if k <= 1 {
        return vec![0; n];
    }
    if k >= n {
        return (0..n).collect();
    }
    let index: HashMap<usize, usize> = comp.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let finest = Level {
        adj: comp.iter().map(|&u| graph.neighbors(u).iter().map(|v| (index[v], 1.0)).collect()).collect(),
        weight: comp.iter().map(|&u| weights[u]).collect(),
        area: comp.iter().map(|&u| areas[u]).collect(),
    };
    let stop = (4 * k).max(20);
    let mut levels = vec![finest];
    let mut maps: Vec<Vec<usize>> = Vec::new();
    while levels.last().expect("nonempty").len() > stop {
        let cur = levels.last().expect("nonempty");
        let (coarse, map) = coarsen(cur, cap, max_area, rng);
        if coarse.len() as f64 > 0.95 * cur.len() as f64 || coarse.len() < k {
            break;
        }
        levels.push(coarse);
        maps.push(map);
    }
    let coarsest = levels.last().expect("nonempty");
    let limits = Limits { cap, max_area };
    let mut best: Option<(Score, Vec<usize>)> = None;
    // Extra trials run only while the best partition still breaks a limit.
    let base = trials.max(1);
    for trial in 0..base * (1 + EXTRA_TRIAL_FACTOR) {
        if trial >= base && best.as_ref().is_some_and(|(b, _)| b.within_limits()) {
            break;
        }
        let seeding = if trial % 2 == 0 { Seeding::Spread } else { Seeding::Random };
        let mut part = grow(coarsest, k, &limits, seeding, rng);
        refine(coarsest, &mut part, k, &limits);
        let s = score(coarsest, &part, k, &limits);
        if best.as_ref().is_none_or(|(b, _)| s.better_than(b)) {
            best = Some((s, part));
        }
    }
    let mut part = best.expect("at least one trial").1;
    for lvl in (0..maps.len()).rev() {
        let fine = &levels[lvl];
        part = (0..fine.len()).map(|u| part[maps[lvl][u]]).collect();
        refine(fine, &mut part, k, &limits);
    }
    part
}

/// Heavy-edge matching; pairs never exceed the weight cap or area bound.
fn coarsen(level: &Level, cap: f64, max_area: f64, rng: &mut ChaCha8Rng) -> (Level, Vec<usize>) {
    let n = level.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    for &u in &order {
        if mate[u] != usize::MAX {
            continue;
        }
        let best = level.adj[u]
            .iter()
            .filter(|&&(v, _)| {
                v != u
                    && mate[v] == usize::MAX
                    && level.weight[u] + level.weight[v] <= cap
                    && level.area[u] + level.area[v] <= max_area
            })
            .max_by(|a, b| {
                a.1.total_cmp(&b.1).then(level.weight[b.0].total_cmp(&level.weight[a.0])).then(b.0.cmp(&a.0))
            });
        match best {
            Some(&(v, _)) => {
                mate[u] = v;
                mate[v] = u;
            }
            None => mate[u] = u,
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut count = 0;
    for u in 0..n {
        if map[u] == usize::MAX {
            map[u] = count;
            map[mate[u]] = count;
            count += 1;
        }
    }
    let mut weight = vec![0.0; count];
    let mut area = vec![0.0; count];
    let mut edges: Vec<HashMap<usize, f64>> = vec![HashMap::new(); count];
    for u in 0..n {
        let cu = map[u];
        weight[cu] += level.weight[u];
        area[cu] += level.area[u];
        for &(v, w) in &level.adj[u] {
            let cv = map[v];
            if cv != cu {
                *edges[cu].entry(cv).or_insert(0.0) += w;
            }
        }
    }
    let adj = edges
        .into_iter()
        .map(|e| {
            let mut v: Vec<(usize, f64)> = e.into_iter().collect();
            v.sort_by_key(|x| x.0);
            v
        })
        .collect();
    (Level { adj, weight, area }, map)
}

struct Limits {
    cap: f64,
    max_area: f64,
}

/// Lexicographic partition quality; lower is better.
#[derive(Debug, Clone, Copy)]
struct Score {
    area_excess: f64,
    weight_excess: f64,
    cut: f64,
}

impl Score {
    fn within_limits(&self) -> bool {
        self.area_excess == 0.0 && self.weight_excess == 0.0
    }

    fn better_than(&self, other: &Score) -> bool {
        let key = |s: &Score| [s.area_excess, s.weight_excess, s.cut];
        let (a, b) = (key(self), key(other));
        for i in 0..3 {
            if a[i] < b[i] - tol(b[i]) {
                return true;
            }
            if a[i] > b[i] + tol(b[i]) {
                return false;
            }
        }
        false
    }
}

fn tol(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

fn excess(x: f64, limit: f64) -> f64 {
    if limit.is_finite() {
        (x - limit).max(0.0)
    } else {
        0.0
    }
}

fn score(level: &Level, part: &[usize], k: usize, lim: &Limits) -> Score {
    let (pw, pa) = part_totals(level, part, k);
    let mut cut = 0.0;
    for u in 0..level.len() {
        for &(v, w) in &level.adj[u] {
            if u < v && part[u] != part[v] {
                cut += w;
            }
        }
    }
    Score {
        area_excess: pa.iter().map(|&a| excess(a, lim.max_area)).sum(),
        weight_excess: pw.iter().map(|&w| excess(w, lim.cap)).sum(),
        cut,
    }
}

fn part_totals(level: &Level, part: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pw = vec![0.0; k];
    let mut pa = vec![0.0; k];
    for u in 0..level.len() {
        pw[part[u]] += level.weight[u];
        pa[part[u]] += level.area[u];
    }
    (pw, pa)
}

/// Multiple of `trials` run additionally when no trial meets the limits.
const EXTRA_TRIAL_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy)]
enum Seeding {
    /// A random node, then repeatedly the node farthest from all seeds.
    Spread,
    /// `k` distinct nodes uniformly at random.
    Random,
}

/// Greedy k-way growing from `k` seeds; the lightest part with an
/// admissible frontier node grows next.
fn grow(level: &Level, k: usize, lim: &Limits, seeding: Seeding, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = level.len();
    let mut part = vec![usize::MAX; n];
    let seeds: Vec<usize> = match seeding {
        Seeding::Spread => {
            let mut seeds = vec![rng.random_range(0..n)];
            while seeds.len() < k {
                let dist = bfs_distance(level, &seeds);
                let far = (0..n)
                    .filter(|u| !seeds.contains(u))
                    .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)))
                    .expect("k < n");
                seeds.push(far);
            }
            seeds
        }
        Seeding::Random => rand::seq::index::sample(rng, n, k).into_vec(),
    };
    let mut pw = vec![0.0; k];
    let mut pa = vec![0.0; k];
    let mut frontier: BTreeSet<usize> = BTreeSet::new();
    for (p, &s) in seeds.iter().enumerate() {
        part[s] = p;
        pw[p] += level.weight[s];
        pa[p] += level.area[s];
    }
    for &s in &seeds {
        frontier.extend(level.adj[s].iter().map(|e| e.0).filter(|&v| part[v] == usize::MAX));
    }
    while !frontier.is_empty() {
        // (part, node, connection) candidates.
        let mut best: Option<(usize, usize, f64, bool)> = None;
        for &v in &frontier {
            let mut conn: Vec<(usize, f64)> = Vec::new();
            for &(u, w) in &level.adj[v] {
                if part[u] != usize::MAX {
                    match conn.iter_mut().find(|c| c.0 == part[u]) {
                        Some(c) => c.1 += w,
                        None => conn.push((part[u], w)),
                    }
                }
            }
            for (p, c) in conn {
                let admissible = pa[p] + level.area[v] <= lim.max_area;
                let better = match best {
                    None => true,
                    Some((bp, bv, bc, badm)) => {
                        (admissible, -pw[p], c, std::cmp::Reverse(v), std::cmp::Reverse(p))
                            .partial_cmp(&(badm, -pw[bp], bc, std::cmp::Reverse(bv), std::cmp::Reverse(bp)))
                            == Some(std::cmp::Ordering::Greater)
                    }
                };
                if better {
                    best = Some((p, v, c, admissible));
                }
            }
        }
        let (p, v, _, _) = best.expect("frontier nodes touch a part");
        part[v] = p;
        pw[p] += level.weight[v];
        pa[p] += level.area[v];
        frontier.remove(&v);
        frontier.extend(level.adj[v].iter().map(|e| e.0).filter(|&x| part[x] == usize::MAX));
    }
    // The component is connected, so every node has been reached.
    debug_assert!(part.iter().all(|&p| p != usize::MAX));
    part
}

fn bfs_distance(level: &Level, sources: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; level.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &level.adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Boundary-move refinement that never disconnects or empties a part.
fn refine(level: &Level, part: &mut [usize], k: usize, lim: &Limits) {
    let n = level.len();
    let (mut pw, mut pa) = part_totals(level, part, k);
    let mut size = vec![0usize; k];
    for &p in part.iter() {
        size[p] += 1;
    }
    for _pass in 0..16 {
        let mut moved = false;
        for u in 0..n {
            let p = part[u];
            if size[p] <= 1 {
                continue;
            }
            let mut conn: Vec<(usize, f64)> = Vec::new();
            let mut own = 0.0;
            for &(v, w) in &level.adj[u] {
                let q = part[v];
                if q == p {
                    own += w;
                } else {
                    match conn.iter_mut().find(|c| c.0 == q) {
                        Some(c) => c.1 += w,
                        None => conn.push((q, w)),
                    }
                }
            }
            if conn.is_empty() {
                continue;
            }
            conn.sort_by_key(|c| c.0);
            let (wu, au) = (level.weight[u], level.area[u]);
            let mut best: Option<(usize, [f64; 4])> = None;
            for &(q, cq) in &conn {
                let d_area = excess(pa[p] - au, lim.max_area) + excess(pa[q] + au, lim.max_area)
                    - excess(pa[p], lim.max_area)
                    - excess(pa[q], lim.max_area);
                let d_weight = excess(pw[p] - wu, lim.cap) + excess(pw[q] + wu, lim.cap)
                    - excess(pw[p], lim.cap)
                    - excess(pw[q], lim.cap);
                let d_cut = own - cq;
                let d_sq = (pw[p] - wu).powi(2) + (pw[q] + wu).powi(2) - pw[p].powi(2) - pw[q].powi(2);
                let key = [d_area, d_weight, d_cut, d_sq];
                if improves(&key, &[pa[p], pw[p], own + cq, pw[p] * pw[p]])
                    && best.as_ref().is_none_or(|(_, b)| lex_less(&key, b))
                {
                    best = Some((q, key));
                }
            }
            let Some((q, _)) = best else { continue };
            if !stays_connected(level, part, u) {
                continue;
            }
            part[u] = q;
            pw[p] -= wu;
            pw[q] += wu;
            pa[p] -= au;
            pa[q] += au;
            size[p] -= 1;
            size[q] += 1;
            moved = true;
        }
        if !moved {
            break;
        }
    }
}

/// Strictly negative in the lexicographic order, with tolerances scaled by
/// the magnitudes involved.
fn improves(delta: &[f64; 4], scale: &[f64; 4]) -> bool {
    for i in 0..4 {
        let t = tol(scale[i]) * 1e3;
        if delta[i] < -t {
            return true;
        }
        if delta[i] > t {
            return false;
        }
    }
    false
}

fn lex_less(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a.partial_cmp(b) == Some(std::cmp::Ordering::Less)
}

/// Whether `u`'s part stays connected without `u`.
fn stays_connected(level: &Level, part: &[usize], u: usize) -> bool {
    let p = part[u];
    let nbrs: Vec<usize> = level.adj[u].iter().map(|e| e.0).filter(|&v| part[v] == p).collect();
    if nbrs.len() <= 1 {
        return true;
    }
    let mut seen: HashMap<usize, ()> = HashMap::new();
    seen.insert(u, ());
    seen.insert(nbrs[0], ());
    let mut queue = VecDeque::from([nbrs[0]]);
    let mut remaining: BTreeSet<usize> = nbrs[1..].iter().copied().collect();
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &level.adj[x] {
            if part[y] == p && !seen.contains_key(&y) {
                seen.insert(y, ());
                remaining.remove(&y);
                if remaining.is_empty() {
                    return true;
                }
                queue.push_back(y);
            }
        }
    }
    remaining.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> AggregatableGraph {
        AggregatableGraph::from_edges(n, edges, BTreeSet::new())
    }

    #[test]
    fn path_of_four_splits_in_half() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let a = d_balance_assignment(&g, &[1.0; 4], &[0.0; 4], 2, &BalanceOptions::default()).unwrap();
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
        assert_ne!(a[0], a[2]);
        assert_eq!(imbalance(&a, &[1.0; 4], 2), 1.0);
    }

    #[test]
    fn m_equals_n_gives_singletons() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let a = d_balance_assignment(&g, &[1.0; 5], &[0.0; 5], 5, &BalanceOptions::default()).unwrap();
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
        assert_eq!(imbalance(&a, &[1.0; 5], 5), 1.0);
    }

    #[test]
    fn star_split_is_one_leaf_versus_rest() {
        // Connectivity forces the center into one part; the other part can
        // only be a single leaf.
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let a = d_balance_assignment(&g, &[1.0; 5], &[0.0; 5], 2, &BalanceOptions::default()).unwrap();
        let mut sizes = [0; 2];
        for &c in &a {
            sizes[c] += 1;
        }
        sizes.sort_unstable();
        assert_eq!(sizes, [1, 4]);
    }

    #[test]
    fn infeasible_m() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        let opts = BalanceOptions::default();
        assert!(matches!(
            d_balance_assignment(&g, &[1.0; 4], &[0.0; 4], 1, &opts),
            Err(PartitionError::InfeasibleM { components: 2, .. })
        ));
        assert!(d_balance_assignment(&g, &[1.0; 4], &[0.0; 4], 5, &opts).is_err());
        let a = d_balance_assignment(&g, &[1.0; 4], &[0.0; 4], 2, &opts).unwrap();
        assert_eq!(a[0], a[1]);
        assert_eq!(a[2], a[3]);
    }

    #[test]
    fn large_grid_is_balanced_and_connected() {
        let side = 30;
        let mut edges = Vec::new();
        for y in 0..side {
            for x in 0..side {
                let u = y * side + x;
                if x + 1 < side {
                    edges.push((u, u + 1));
                }
                if y + 1 < side {
                    edges.push((u, u + side));
                }
            }
        }
        let n = side * side;
        let g = graph(n, &edges);
        let w: Vec<f64> = (0..n).map(|u| 1.0 + (u % 7) as f64).collect();
        let a = d_balance_assignment(&g, &w, &vec![0.0; n], 12, &BalanceOptions::default()).unwrap();
        assert!(imbalance(&a, &w, 12) <= 1.05 + 1e-9, "{}", imbalance(&a, &w, 12));
        let v = super::super::check_feasible(&a, 12, &g, &vec![0.0; n], 1.0);
        assert!(v.is_empty(), "{v:?}");
    }
}
