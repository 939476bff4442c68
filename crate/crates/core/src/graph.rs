//! The aggregatable graph: atomic elements as nodes, "may be merged" edges
//! between nearby elements not separated by an obstacle, and standalone
//! nodes that are excluded from merging.

use crate::geometry::{bbox_distance_m, min_distance_m, segment_crosses, BBox, Polygon, KM_PER_DEGREE};
use crate::metrics::MetricsError;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("every element falls below the minimum daily demand {alpha}")]
    AllFiltered { alpha: f64 },
    #[error("alpha must be nonnegative, got {0}")]
    NegativeAlpha(f64),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// One road/obstacle-bounded polygon with its area, serviced area and
/// demand series.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicElement {
    /// Identifier from segmentation (stable across filtering).
    pub id: usize,
    pub polygon: Polygon,
    pub ts_km2: f64,
    pub vs_km2: f64,
    pub series: Vec<f64>,
    /// Daily autocorrelation, `None` when the series is flat.
    pub acf_daily: Option<f64>,
}

impl AtomicElement {
    pub fn total_demand(&self) -> f64 {
        self.series.iter().sum()
    }

    pub fn mean_daily_demand(&self, intervals_per_day: usize) -> f64 {
        if self.series.is_empty() {
            return 0.0;
        }
        self.total_demand() * intervals_per_day as f64 / self.series.len() as f64
    }
}

/// Elements kept by [`filter_elements`] and the share of demand they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub retained: Vec<AtomicElement>,
    pub recall: f64,
}

/// Keeps elements whose mean daily demand is at least `alpha`.
pub fn filter_elements(
    elements: Vec<AtomicElement>,
    alpha: f64,
    intervals_per_day: usize,
) -> Result<Filtered, GraphError> {
    if !(alpha >= 0.0) {
        return Err(GraphError::NegativeAlpha(alpha));
    }
    let total: f64 = elements.iter().map(AtomicElement::total_demand).sum();
    let retained: Vec<AtomicElement> =
        elements.into_iter().filter(|e| e.mean_daily_demand(intervals_per_day) >= alpha).collect();
    if retained.is_empty() {
        return Err(GraphError::AllFiltered { alpha });
    }
    let kept: f64 = retained.iter().map(AtomicElement::total_demand).sum();
    let recall = if total > 0.0 { kept / total } else { 1.0 };
    Ok(Filtered { retained, recall })
}

/// Positions of elements that are oversize (`ts > max_area_km2`) or already
/// predictable (`acf_daily > acf_threshold`). Flat series never count as
/// predictable.
pub fn mark_standalone(elements: &[AtomicElement], max_area_km2: f64, acf_threshold: f64) -> BTreeSet<usize> {
    elements
        .iter()
        .enumerate()
        .filter(|(_, e)| e.ts_km2 > max_area_km2 || e.acf_daily.is_some_and(|a| a > acf_threshold))
        .map(|(i, _)| i)
        .collect()
}

/// Nodes are element positions `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatableGraph {
    adjacency: Vec<Vec<usize>>,
    pub standalone: BTreeSet<usize>,
}

impl AggregatableGraph {
    /// Graph with no edges.
    pub fn empty(n: usize) -> Self {
        Self { adjacency: vec![Vec::new(); n], standalone: BTreeSet::new() }
    }

    /// Builds a graph from an edge list; duplicate and self edges are
    /// ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], standalone: BTreeSet<usize>) -> Self {
        let mut g = Self { adjacency: vec![Vec::new(); n], standalone };
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v || self.adjacency[u].contains(&v) {
            return;
        }
        self.adjacency[u].push(v);
        self.adjacency[v].push(u);
        self.adjacency[u].sort_unstable();
        self.adjacency[v].sort_unstable();
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, ns) in self.adjacency.iter().enumerate() {
            out.extend(ns.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edge-list text: a `standalone:` header line followed by one `u v`
    /// line per edge, using the given labels for nodes.
    pub fn to_edge_list(&self, labels: &[usize]) -> String {
        let mut out = String::from("standalone:");
        for &s in &self.standalone {
            let _ = write!(out, " {}", labels[s]);
        }
        out.push('\n');
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{} {}", labels[u], labels[v]);
        }
        out
    }
}

/// Connects every pair of non-standalone elements closer than `tau_m` whose
/// closest-point segment meets no obstacle.
pub fn build_edges(
    elements: &[AtomicElement],
    standalone: &BTreeSet<usize>,
    tau_m: f64,
    obstacles: &[Polygon],
) -> AggregatableGraph {
    let polys: Vec<&Polygon> = elements.iter().map(|e| &e.polygon).collect();
    let edges = candidate_edges(&polys, standalone, tau_m, obstacles);
    AggregatableGraph::from_edges(elements.len(), &edges, standalone.clone())
}

/// Edge test over bare polygons, shared with grid-element workloads.
pub fn candidate_edges(
    polys: &[&Polygon],
    standalone: &BTreeSet<usize>,
    tau_m: f64,
    obstacles: &[Polygon],
) -> Vec<(usize, usize)> {
    if !(tau_m > 0.0) {
        return Vec::new();
    }
    let boxes: Vec<BBox> = polys.iter().map(|p| p.bbox()).collect();
    let obstacle_boxes: Vec<BBox> = obstacles.iter().map(Polygon::bbox).collect();
    let max_abs_lat = boxes.iter().map(|b| b.min_lat.abs().max(b.max_lat.abs())).fold(0.0, f64::max);
    // Longitude span that can hold a gap of tau_m anywhere in the extent.
    let cos = max_abs_lat.min(89.0).to_radians().cos();
    let lon_window = tau_m / 1000.0 / (KM_PER_DEGREE * cos);
    let mut order: Vec<usize> = (0..polys.len()).filter(|i| !standalone.contains(i)).collect();
    order.sort_by(|&a, &b| boxes[a].min_lon.total_cmp(&boxes[b].min_lon).then(a.cmp(&b)));
    let mut edges = Vec::new();
    for (pos, &u) in order.iter().enumerate() {
        for &v in &order[pos + 1..] {
            if boxes[v].min_lon - boxes[u].max_lon > lon_window {
                break;
            }
            if bbox_distance_m(polys[u], polys[v], &boxes[u], &boxes[v]) >= tau_m {
                continue;
            }
            if min_distance_m(polys[u], polys[v]) >= tau_m {
                continue;
            }
            let span = boxes[u].union(&boxes[v]);
            let near: Vec<Polygon> = obstacles
                .iter()
                .zip(&obstacle_boxes)
                .filter(|(_, ob)| overlaps(ob, &span))
                .map(|(o, _)| o.clone())
                .collect();
            if !segment_crosses(polys[u], polys[v], &near) {
                edges.push((u.min(v), u.max(v)));
            }
        }
    }
    edges.sort_unstable();
    edges
}

fn overlaps(a: &BBox, b: &BBox) -> bool {
    a.min_lon <= b.max_lon && b.min_lon <= a.max_lon && a.min_lat <= b.max_lat && b.min_lat <= a.max_lat
}

#[cfg(test)]
mod tests {
    use super::*;

    fn element(id: usize, poly: Polygon, ts: f64, acf: Option<f64>, series: Vec<f64>) -> AtomicElement {
        AtomicElement { id, polygon: poly, ts_km2: ts, vs_km2: ts / 2.0, series, acf_daily: acf }
    }

    fn square(lon: f64, lat: f64, side: f64) -> Polygon {
        Polygon::rectangle(lon, lat, lon + side, lat + side)
    }

    #[test]
    fn filtering() {
        let es = vec![
            element(0, square(0.0, 0.0, 0.01), 1.0, None, vec![0.0; 48]),
            element(1, square(0.02, 0.0, 0.01), 1.0, None, vec![1.0; 48]),
        ];
        let f = filter_elements(es.clone(), 0.0, 24).unwrap();
        assert_eq!(f.retained.len(), 2);
        let f = filter_elements(es.clone(), 0.1, 24).unwrap();
        assert_eq!(f.retained.iter().map(|e| e.id).collect::<Vec<_>>(), vec![1]);
        assert_eq!(f.recall, 1.0);
        assert!(matches!(filter_elements(es, 100.0, 24), Err(GraphError::AllFiltered { .. })));
    }

    #[test]
    fn standalone_rules() {
        let sq = square(0.0, 0.0, 0.01);
        let es = vec![
            element(0, sq.clone(), 6.0, Some(0.1), vec![]),
            element(1, sq.clone(), 0.1, Some(0.6), vec![]),
            element(2, sq.clone(), 1.0, Some(0.4), vec![]),
            element(3, sq, 1.0, None, vec![]),
        ];
        assert_eq!(mark_standalone(&es, 5.0, 0.5), BTreeSet::from([0, 1]));
    }

    #[test]
    fn edges_respect_distance_obstacles_and_standalone() {
        // Four squares in a row with 0.0002° (~22 m) gaps; a river strip
        // between the third and fourth.
        let side = 0.004;
        let gap = 0.0002;
        let es: Vec<AtomicElement> = (0..4)
            .map(|i| element(i, square(i as f64 * (side + gap), 0.0, side), 0.2, Some(0.1), vec![]))
            .collect();
        let river = Polygon::rectangle(3.0 * side + 2.0 * gap + 0.00005, -0.01, 3.0 * (side + gap) - 0.00005, 0.01);
        let g = build_edges(&es, &BTreeSet::new(), 50.0, std::slice::from_ref(&river));
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        let g = build_edges(&es, &BTreeSet::new(), 50.0, &[]);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 3)]);
        let g = build_edges(&es, &BTreeSet::from([1]), 50.0, &[]);
        assert_eq!(g.edges(), vec![(2, 3)]);
        assert!(g.neighbors(1).is_empty());
        assert!(build_edges(&es, &BTreeSet::new(), 0.0, &[]).edges().is_empty());
        let g = build_edges(&es, &BTreeSet::new(), 1e6, &[]);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn edge_list_dump() {
        let g = AggregatableGraph::from_edges(4, &[(2, 1), (0, 1)], BTreeSet::from([3]));
        assert_eq!(g.to_edge_list(&[10, 11, 12, 13]), "standalone: 13\n10 11\n11 12\n");
    }
}
