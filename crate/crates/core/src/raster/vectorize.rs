//! Traces labeled components into polygons along pixel-cell edges.

use super::{GeoTransform, LabeledRaster};
use crate::geometry::{ring_orientation, Polygon, Ring};
use std::collections::HashMap;

type Vertex = (u32, u32);

#[derive(Debug, Clone, Copy)]
struct Edge {
    from: Vertex,
    to: Vertex,
}

impl Edge {
    /// Direction in geographic orientation (y axis pointing north).
    fn geo_dir(&self) -> (i64, i64) {
        (
            i64::from(self.to.0) - i64::from(self.from.0),
            i64::from(self.from.1) - i64::from(self.to.1),
        )
    }
}

/// One polygon per component: exterior ring counter-clockwise (in lon/lat)
/// plus hole rings, all running along pixel edges with collinear vertices
/// merged. Returned in component-id order.
pub fn vectorize(l: &LabeledRaster, geo: &GeoTransform) -> Vec<(u32, Polygon)> {
    let (w, h) = (l.width, l.height);
    let mut edges: Vec<Vec<Edge>> = vec![Vec::new(); l.component_count as usize + 1];
    let label_at = |x: i64, y: i64| -> u32 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0
        } else {
            l.labels[y as usize * w + x as usize]
        }
    };
    for y in 0..h {
        for x in 0..w {
            let lab = l.labels[y * w + x];
            if lab == 0 {
                continue;
            }
            let (xi, yi) = (x as i64, y as i64);
            let (c, r) = (x as u32, y as u32);
            let list = &mut edges[lab as usize];
            // Interior stays on the left when walking each edge in
            // geographic orientation.
            if label_at(xi, yi - 1) != lab {
                list.push(Edge { from: (c + 1, r), to: (c, r) });
            }
            if label_at(xi - 1, yi) != lab {
                list.push(Edge { from: (c, r), to: (c, r + 1) });
            }
            if label_at(xi, yi + 1) != lab {
                list.push(Edge { from: (c, r + 1), to: (c + 1, r + 1) });
            }
            if label_at(xi + 1, yi) != lab {
                list.push(Edge { from: (c + 1, r + 1), to: (c + 1, r) });
            }
        }
    }
    let mut out = Vec::with_capacity(l.component_count as usize);
    for (lab, list) in edges.iter().enumerate().skip(1) {
        if list.is_empty() {
            continue;
        }
        let rings = trace_rings(list);
        let mut exterior: Option<Ring> = None;
        let mut holes = Vec::new();
        for ring in rings {
            let pts: Ring = ring.iter().map(|&(x, y)| geo.corner(f64::from(x), f64::from(y))).collect();
            if ring_orientation(&pts) > 0.0 {
                debug_assert!(exterior.is_none(), "component {lab} has several outer rings");
                exterior = Some(pts);
            } else {
                holes.push(pts);
            }
        }
        if let Some(ext) = exterior {
            out.push((lab as u32, Polygon::from_rings_unchecked(ext, holes)));
        }
    }
    out
}

/// Links directed edges into closed rings, preferring a left turn at vertices
/// with two outgoing edges so that diagonally touching pixels stay separate.
fn trace_rings(edges: &[Edge]) -> Vec<Vec<Vertex>> {
    let mut outgoing: HashMap<Vertex, Vec<usize>> = HashMap::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        outgoing.entry(e.from).or_default().push(i);
    }
    let mut used = vec![false; edges.len()];
    let mut rings = Vec::new();
    for start in 0..edges.len() {
        if used[start] || outgoing[&edges[start].from].len() != 1 {
            continue;
        }
        let mut verts = vec![edges[start].from];
        let mut cur = start;
        loop {
            used[cur] = true;
            let e = edges[cur];
            verts.push(e.to);
            let d = e.geo_dir();
            let next = outgoing[&e.to]
                .iter()
                .copied()
                .max_by_key(|&j| {
                    let c = edges[j].geo_dir();
                    d.0 * c.1 - d.1 * c.0
                })
                .expect("boundary edges form closed loops");
            if next == start {
                break;
            }
            cur = next;
        }
        rings.push(merge_collinear(verts));
    }
    debug_assert!(used.iter().all(|&u| u), "unvisited boundary edges");
    rings
}

/// Drops vertices lying on a straight run; keeps the ring closed.
fn merge_collinear(mut verts: Vec<Vertex>) -> Vec<Vertex> {
    verts.pop();
    let n = verts.len();
    let dir = |a: Vertex, b: Vertex| {
        (
            (i64::from(b.0) - i64::from(a.0)).signum(),
            (i64::from(b.1) - i64::from(a.1)).signum(),
        )
    };
    let mut out: Vec<Vertex> = (0..n)
        .filter(|&i| {
            let prev = verts[(i + n - 1) % n];
            let next = verts[(i + 1) % n];
            dir(prev, verts[i]) != dir(verts[i], next)
        })
        .map(|i| verts[i])
        .collect();
    out.push(out[0]);
    out
}
