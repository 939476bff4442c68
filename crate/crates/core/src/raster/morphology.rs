//! Square dilation and topology-preserving thinning.

use super::{RasterError, RasterGrid};

/// Dilation with a `kernel × kernel` square structuring element centered on
/// each pixel. Computed separably: a pixel is set iff its row window, taken
/// over the column-window maxima, contains a set pixel.
pub fn dilate(r: &RasterGrid, kernel: usize) -> Result<RasterGrid, RasterError> {
    if kernel == 0 || kernel.is_multiple_of(2) {
        return Err(RasterError::EvenKernel(kernel));
    }
    let rad = kernel / 2;
    let (w, h) = (r.width, r.height);
    let mut horiz = vec![0u8; w * h];
    for y in 0..h {
        let row = &r.pixels[y * w..(y + 1) * w];
        let mut prefix = vec![0u32; w + 1];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + u32::from(row[x] != 0);
        }
        for x in 0..w {
            let lo = x.saturating_sub(rad);
            let hi = (x + rad + 1).min(w);
            horiz[y * w + x] = u8::from(prefix[hi] > prefix[lo]);
        }
    }
    let mut out = RasterGrid::zeros(w, h, r.geo);
    for x in 0..w {
        let mut prefix = vec![0u32; h + 1];
        for y in 0..h {
            prefix[y + 1] = prefix[y] + u32::from(horiz[y * w + x]);
        }
        for y in 0..h {
            let lo = y.saturating_sub(rad);
            let hi = (y + rad + 1).min(h);
            out.pixels[y * w + x] = u8::from(prefix[hi] > prefix[lo]);
        }
    }
    Ok(out)
}

/// Neighbors P2..P9 clockwise from north: N, NE, E, SE, S, SW, W, NW.
const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn neighbors(r: &RasterGrid, x: usize, y: usize) -> [u8; 8] {
    let mut n = [0u8; 8];
    for (k, (dx, dy)) in RING.iter().enumerate() {
        n[k] = r.at(x as i64 + dx, y as i64 + dy);
    }
    n
}

/// Number of 0→1 transitions around the ring.
fn transitions(n: &[u8; 8]) -> u32 {
    (0..8).filter(|&k| n[k] == 0 && n[(k + 1) % 8] == 1).count() as u32
}

/// Yokoi connectivity number for 8-connected foreground. A foreground pixel
/// is simple (deletable without changing topology) iff this equals 1.
fn crossing_number8(n: &[u8; 8]) -> u32 {
    // Yokoi's x1..x8 run counter-clockwise from east; in RING order that is
    // E, NE, N, NW, W, SW, S, SE.
    let order = [2, 1, 0, 7, 6, 5, 4, 3];
    let inv = |k: usize| 1 - u32::from(n[order[k % 8]]);
    [0, 2, 4, 6].iter().map(|&k| inv(k) - inv(k) * inv(k + 1) * inv(k + 2)).sum()
}

fn is_simple(img: &RasterGrid, x: usize, y: usize) -> bool {
    let n = neighbors(img, x, y);
    let b: u32 = n.iter().map(|&v| u32::from(v)).sum();
    b >= 2 && crossing_number8(&n) == 1
}

/// Zhang–Suen thinning with a topology guard.
///
/// Each sub-iteration selects deletion candidates with the classical
/// Zhang–Suen tests and deletes them in parallel, except that (following
/// Ronse's sufficient conditions for parallel deletion) a candidate is kept
/// when it is not simple, when it and an already accepted 4-neighbor are not
/// simple as a pair, or when it is the first pixel of an 8-component whose
/// pixels would all be deleted. Plain Zhang–Suen erases 2×2 blocks and some
/// 2-pixel-thick diagonals; the guard keeps the number of 8-connected
/// foreground components unchanged and otherwise leaves the classical result
/// intact.
pub fn thin(r: &RasterGrid) -> RasterGrid {
    let mut img = r.clone();
    img.pixels.iter_mut().for_each(|v| *v = u8::from(*v != 0));
    let w = img.width;
    loop {
        let mut changed = false;
        for step in 0..2 {
            let mut candidates = Vec::new();
            for y in 0..img.height {
                for x in 0..w {
                    if img.get(x, y) == 0 {
                        continue;
                    }
                    let n = neighbors(&img, x, y);
                    let b: u32 = n.iter().map(|&v| u32::from(v)).sum();
                    if !(2..=6).contains(&b) || transitions(&n) != 1 || crossing_number8(&n) != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
                    let ok = if step == 0 {
                        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                    } else {
                        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                    };
                    if ok {
                        candidates.push((x, y));
                    }
                }
            }
            let mut delete = vec![false; img.pixels.len()];
            for &(x, y) in &candidates {
                let mut ok = true;
                for (dx, dy) in [(0i64, -1i64), (-1, 0), (1, 0), (0, 1)] {
                    let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                    if img.at(qx, qy) == 0 || !delete[qy as usize * w + qx as usize] {
                        continue;
                    }
                    let q = qy as usize * w + qx as usize;
                    img.pixels[q] = 0;
                    ok &= is_simple(&img, x, y);
                    img.pixels[q] = 1;
                }
                delete[y * w + x] = ok;
            }
            protect_whole_components(&img, &candidates, &mut delete);
            for &(x, y) in &candidates {
                if delete[y * w + x] {
                    img.set(x, y, 0);
                    changed = true;
                }
            }
        }
        if !changed {
            return img;
        }
    }
}

/// Un-marks the first pixel (raster order) of every 8-component whose pixels
/// are all marked for deletion.
fn protect_whole_components(img: &RasterGrid, candidates: &[(usize, usize)], delete: &mut [bool]) {
    let w = img.width;
    let mut seen = std::collections::HashSet::new();
    for &(x, y) in candidates {
        let start = y * w + x;
        if !delete[start] || seen.contains(&start) {
            continue;
        }
        let mut stack = vec![start];
        let mut members = vec![start];
        seen.insert(start);
        let mut all_deleted = true;
        while let Some(i) = stack.pop() {
            let (cx, cy) = ((i % w) as i64, (i / w) as i64);
            for (dx, dy) in RING {
                let (qx, qy) = (cx + dx, cy + dy);
                if img.at(qx, qy) == 0 {
                    continue;
                }
                let q = qy as usize * w + qx as usize;
                if seen.insert(q) {
                    all_deleted &= delete[q];
                    stack.push(q);
                    members.push(q);
                }
            }
        }
        if all_deleted {
            let first = *members.iter().min().expect("nonempty component");
            delete[first] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize, on: &[(usize, usize)]) -> RasterGrid {
        let mut rows = vec![vec![0u8; w]; h];
        for &(x, y) in on {
            rows[y][x] = 1;
        }
        RasterGrid::from_rows(&rows)
    }

    #[test]
    fn kernel_one_is_identity_and_even_rejected() {
        let g = grid(7, 5, &[(1, 1), (3, 4), (6, 0)]);
        assert_eq!(dilate(&g, 1).unwrap(), g);
        assert_eq!(dilate(&g, 4).unwrap_err(), RasterError::EvenKernel(4));
    }

    #[test]
    fn single_pixel_becomes_block() {
        let g = grid(9, 9, &[(4, 4)]);
        let d = dilate(&g, 5).unwrap();
        assert_eq!(d.count_ones(), 25);
        for y in 2..=6 {
            for x in 2..=6 {
                assert_eq!(d.get(x, y), 1);
            }
        }
    }

    #[test]
    fn thin_line_unchanged() {
        let g = grid(10, 5, &(1..9).map(|x| (x, 2)).collect::<Vec<_>>());
        assert_eq!(thin(&g), g);
    }

    #[test]
    fn bar_thins_to_single_column() {
        let mut on = Vec::new();
        for y in 2..18 {
            for x in 3..8 {
                on.push((x, y));
            }
        }
        let t = thin(&grid(11, 20, &on));
        for y in 0..20 {
            assert!((0..11).filter(|&x| t.get(x, y) == 1).count() <= 1, "row {y}");
        }
        let mut cols = std::collections::BTreeSet::new();
        for y in 0..20 {
            cols.extend((0..11).filter(|&x| t.get(x, y) == 1));
        }
        assert_eq!(cols.len(), 1);
        assert!(t.count_ones() >= 10);
    }

    #[test]
    fn two_by_two_block_survives() {
        let t = thin(&grid(6, 6, &[(2, 2), (3, 2), (2, 3), (3, 3)]));
        assert!(t.count_ones() >= 1);
    }

    #[test]
    fn yokoi_number_examples() {
        // Isolated and interior pixels are not simple.
        assert_eq!(crossing_number8(&[0; 8]), 0);
        assert_eq!(crossing_number8(&[1; 8]), 0);
        // A bridge between north and south is not simple.
        assert_eq!(crossing_number8(&[1, 0, 0, 0, 1, 0, 0, 0]), 2);
        // An edge pixel is simple.
        assert_eq!(crossing_number8(&[1, 1, 1, 0, 0, 0, 0, 0]), 1);
    }
}
