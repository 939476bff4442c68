//! Connectivity repair for partitions whose parts split into pieces.

use super::topology::connected_components_of;
use crate::graph::AggregatableGraph;

/// Makes every cluster induce a connected subgraph where possible. In each
/// disconnected cluster the heaviest fragment stays (ties: the fragment with
/// the lowest node) and every other fragment moves to the adjacent cluster
/// with the most spare area (ties: lowest cluster id). A fragment with no
/// adjacent cluster moves to an empty cluster if one exists, otherwise it
/// stays. Returns the number of fragments moved.
pub fn repair_connectivity(
    graph: &AggregatableGraph,
    assignment: &mut [usize],
    m: usize,
    weights: &[f64],
    areas: &[f64],
    max_area: f64,
) -> usize {
    let mut moved = 0;
    loop {
        let mut changed = false;
        let mut area = vec![0.0; m];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (u, &c) in assignment.iter().enumerate() {
            area[c] += areas[u];
            members[c].push(u);
        }
        for c in 0..m {
            let frags = connected_components_of(graph, &members[c]);
            if frags.len() < 2 {
                continue;
            }
            let weight = |f: &Vec<usize>| f.iter().map(|&u| weights[u]).sum::<f64>();
            let keep = (0..frags.len())
                .max_by(|&a, &b| weight(&frags[a]).total_cmp(&weight(&frags[b])).then(b.cmp(&a)))
                .expect("at least two fragments");
            for (k, frag) in frags.iter().enumerate() {
                if k == keep {
                    continue;
                }
                let mut targets: Vec<usize> = frag
                    .iter()
                    .flat_map(|&u| graph.neighbors(u).iter().map(|&v| assignment[v]))
                    .filter(|&t| t != c)
                    .collect();
                targets.sort_unstable();
                targets.dedup();
                let target = targets
                    .iter()
                    .copied()
                    .max_by(|&a, &b| (max_area - area[a]).total_cmp(&(max_area - area[b])).then(b.cmp(&a)))
                    .or_else(|| (0..m).find(|&t| members[t].is_empty()));
                let Some(t) = target else { continue };
                let frag_area: f64 = frag.iter().map(|&u| areas[u]).sum();
                for &u in frag {
                    assignment[u] = t;
                }
                area[c] -= frag_area;
                area[t] += frag_area;
                members[t].extend(frag.iter().copied());
                moved += 1;
                changed = true;
            }
            members[c] = frags[keep].clone();
        }
        if !changed {
            return moved;
        }
    }
}
