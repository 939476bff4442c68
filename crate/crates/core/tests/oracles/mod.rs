//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's algorithms; each oracle follows
//! the plain mathematical definition.

#![allow(dead_code, clippy::needless_range_loop)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

/// Lag-`k` autocorrelation of integer samples evaluated exactly with a
/// double loop: `T·Σ_{t≥k}(s_t−s̄)(s_{t−k}−s̄) / ((T−k)·Σ_t(s_t−s̄)²)`,
/// scaled by `T²` in numerator and denominator so all arithmetic is
/// integral. Returns `None` for a constant series.
pub fn acf_exact(samples: &[i64], k: usize) -> Option<f64> {
    let t = samples.len();
    let big_t = BigInt::from(t as i64);
    let sum: BigInt = samples.iter().map(|&v| BigInt::from(v)).sum();
    let centered: Vec<BigInt> = samples.iter().map(|&v| &big_t * BigInt::from(v) - &sum).collect();
    let mut num = BigInt::from(0);
    for i in k..t {
        num += &centered[i] * &centered[i - k];
    }
    let mut den = BigInt::from(0);
    for c in &centered {
        den += c * c;
    }
    if den == BigInt::from(0) {
        return None;
    }
    let ratio = BigRational::new(big_t * num, BigInt::from((t - k) as i64) * den);
    ratio.to_f64()
}

/// Lag-`k` autocorrelation in floating point by the definition; constant
/// series score 0 (the clustering objective's convention).
pub fn acf_f64(s: &[f64], k: usize) -> f64 {
    let t = s.len();
    let mean = s.iter().sum::<f64>() / t as f64;
    let mut num = 0.0;
    for i in k..t {
        num += (s[i] - mean) * (s[i - k] - mean);
    }
    let den: f64 = s.iter().map(|v| (v - mean) * (v - mean)).sum();
    if den == 0.0 {
        0.0
    } else {
        t as f64 * num / ((t - k) as f64 * den)
    }
}

pub type Grid = Vec<Vec<u8>>;

/// Square dilation by definition: a pixel is set iff some pixel of the
/// `kernel × kernel` window centered on it is set.
pub fn dilate(g: &Grid, kernel: usize) -> Grid {
    let (h, w) = (g.len(), g[0].len());
    let r = (kernel / 2) as i64;
    let mut out = vec![vec![0; w]; h];
    for y in 0..h {
        for x in 0..w {
            let mut hit = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                    if xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h && g[yy as usize][xx as usize] != 0 {
                        hit = 1;
                    }
                }
            }
            out[y][x] = hit;
        }
    }
    out
}

/// Textbook two-subiteration Zhang–Suen thinning (pixels outside the grid
/// are background).
pub fn zhang_suen(g: &Grid) -> Grid {
    let (h, w) = (g.len(), g[0].len());
    let mut img = g.clone();
    let at = |img: &Grid, x: i64, y: i64| -> u8 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0
        } else {
            img[y as usize][x as usize]
        }
    };
    loop {
        let mut changed = false;
        for step in 0..2 {
            let mut delete = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if img[y][x] == 0 {
                        continue;
                    }
                    let (xi, yi) = (x as i64, y as i64);
                    // P2..P9 clockwise from north.
                    let p = [
                        at(&img, xi, yi - 1),
                        at(&img, xi + 1, yi - 1),
                        at(&img, xi + 1, yi),
                        at(&img, xi + 1, yi + 1),
                        at(&img, xi, yi + 1),
                        at(&img, xi - 1, yi + 1),
                        at(&img, xi - 1, yi),
                        at(&img, xi - 1, yi - 1),
                    ];
                    let b: u8 = p.iter().sum();
                    let a = (0..8).filter(|&i| p[i] == 0 && p[(i + 1) % 8] == 1).count();
                    let cond = if step == 0 {
                        p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0
                    } else {
                        p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0
                    };
                    if (2..=6).contains(&b) && a == 1 && cond {
                        delete.push((x, y));
                    }
                }
            }
            for &(x, y) in &delete {
                img[y][x] = 0;
            }
            changed |= !delete.is_empty();
        }
        if !changed {
            return img;
        }
    }
}

/// Labels connected components of pixels equal to `value` by depth-first
/// flood fill, numbering from 1 in raster order of each component's first
/// pixel; other pixels get 0.
pub fn flood_label(g: &Grid, value: u8, eight: bool) -> (Vec<Vec<u32>>, u32) {
    let (h, w) = (g.len(), g[0].len());
    let mut labels = vec![vec![0u32; w]; h];
    let mut next = 0;
    let offsets: &[(i64, i64)] = if eight {
        &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    } else {
        &[(0, -1), (-1, 0), (1, 0), (0, 1)]
    };
    for y in 0..h {
        for x in 0..w {
            if g[y][x] != value || labels[y][x] != 0 {
                continue;
            }
            next += 1;
            labels[y][x] = next;
            let mut stack = vec![(x, y)];
            while let Some((cx, cy)) = stack.pop() {
                for &(dx, dy) in offsets {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if g[ny][nx] == value && labels[ny][nx] == 0 {
                        labels[ny][nx] = next;
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Number of 8-connected foreground components.
pub fn components8(g: &Grid) -> u32 {
    flood_label(g, 1, true).1
}

const BASE32: &[u8] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// Geohash by repeated interval halving, longitude bit first.
pub fn geohash(lat: f64, lon: f64, chars: usize) -> String {
    let (mut lat_lo, mut lat_hi) = (-90.0, 90.0);
    let (mut lon_lo, mut lon_hi) = (-180.0, 180.0);
    let mut out = String::new();
    let mut bits = 0u8;
    let mut n = 0;
    let mut even = true;
    while out.len() < chars {
        let bit = if even {
            let mid = (lon_lo + lon_hi) / 2.0;
            if lon >= mid {
                lon_lo = mid;
                1
            } else {
                lon_hi = mid;
                0
            }
        } else {
            let mid = (lat_lo + lat_hi) / 2.0;
            if lat >= mid {
                lat_lo = mid;
                1
            } else {
                lat_hi = mid;
                0
            }
        };
        even = !even;
        bits = (bits << 1) | bit;
        n += 1;
        if n == 5 {
            out.push(BASE32[bits as usize] as char);
            bits = 0;
            n = 0;
        }
    }
    out
}

/// Feasibility of a clustering by definition: every node in `0..m`, no
/// empty cluster, each cluster's total area at most `limit`, and each
/// cluster connected in the undirected graph `adj`.
pub fn feasible(assignment: &[usize], m: usize, adj: &[Vec<usize>], area: &[f64], limit: f64) -> bool {
    if assignment.len() != adj.len() || assignment.iter().any(|&c| c >= m) {
        return false;
    }
    (0..m).all(|c| {
        let members: Vec<usize> = (0..adj.len()).filter(|&u| assignment[u] == c).collect();
        if members.is_empty() {
            return false;
        }
        let total: f64 = members.iter().map(|&u| area[u]).sum();
        total <= limit && connected(&members, adj)
    })
}

/// Whether `nodes` induce a connected subgraph.
pub fn connected(nodes: &[usize], adj: &[Vec<usize>]) -> bool {
    let Some(&start) = nodes.first() else { return false };
    let inside = |u: usize| nodes.contains(&u);
    let mut seen = vec![start];
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if inside(v) && !seen.contains(&v) {
                seen.push(v);
                stack.push(v);
            }
        }
    }
    seen.len() == nodes.len()
}

/// Every partition of `0..n` into exactly `m` nonempty blocks, as
/// restricted-growth strings (block ids by first occurrence).
pub fn set_partitions(n: usize, m: usize, mut visit: impl FnMut(&[usize])) {
    fn go(a: &mut Vec<usize>, n: usize, m: usize, used: usize, visit: &mut dyn FnMut(&[usize])) {
        if a.len() == n {
            if used == m {
                visit(a);
            }
            return;
        }
        // Prune: not enough positions left to open the remaining blocks.
        if m - used > n - a.len() {
            return;
        }
        for c in 0..=used.min(m - 1) {
            a.push(c);
            go(a, n, m, used.max(c + 1), visit);
            a.pop();
        }
    }
    go(&mut Vec::with_capacity(n), n, m, 0, &mut visit);
}

/// Mean daily autocorrelation and mean specificity of a clustering, by
/// definition.
pub fn objectives(assignment: &[usize], m: usize, series: &[Vec<f64>], ts: &[f64], vs: &[f64], lag: usize) -> (f64, f64) {
    let t = series[0].len();
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    for c in 0..m {
        let mut sum = vec![0.0; t];
        let (mut a, mut b) = (0.0, 0.0);
        for (u, &cu) in assignment.iter().enumerate() {
            if cu == c {
                for (s, v) in sum.iter_mut().zip(&series[u]) {
                    *s += v;
                }
                a += ts[u];
                b += vs[u];
            }
        }
        f1 += acf_f64(&sum, lag);
        f2 += if a > 0.0 { b / a } else { 0.0 };
    }
    (f1 / m as f64, f2 / m as f64)
}

/// Non-dominated points of `points` (maximizing both coordinates) with
/// tolerance `tol`, sorted by the first coordinate and de-duplicated.
pub fn pareto_front(points: &[(f64, f64)], tol: f64) -> Vec<(f64, f64)> {
    let mut front: Vec<(f64, f64)> =
        points.iter().copied().filter(|q| !points.iter().any(|o| dominates(*o, *q, tol))).collect();
    front.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    front.dedup_by(|a, b| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol);
    front
}

/// `a` dominates `b` (maximization) beyond tolerance `tol`.
pub fn dominates(a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
    a.0 >= b.0 - tol && a.1 >= b.1 - tol && (a.0 > b.0 + tol || a.1 > b.1 + tol)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}
