//! Boundary fusion and 4-connected labeling of background pixels.

use super::{RasterError, RasterGrid};
use std::collections::VecDeque;

/// Component labels; 0 marks boundary pixels, `1..=component_count` the
/// background components in raster order of their first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledRaster {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub component_count: u32,
}

impl LabeledRaster {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per label, indexed by label (entry 0 counts boundary
    /// pixels).
    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.component_count as usize + 1];
        for &l in &self.labels {
            out[l as usize] += 1;
        }
        out
    }
}

/// Fuses the road skeleton with the obstacle raster and labels the
/// background with 4-connected components.
pub fn fuse_and_label(skeleton: &RasterGrid, obstacle: &RasterGrid) -> Result<LabeledRaster, RasterError> {
    if skeleton.dims() != obstacle.dims() {
        return Err(RasterError::DimensionMismatch(skeleton.dims(), obstacle.dims()));
    }
    let (w, h) = skeleton.dims();
    let boundary: Vec<bool> = skeleton.pixels.iter().zip(&obstacle.pixels).map(|(a, b)| *a != 0 || *b != 0).collect();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if boundary[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut push = |j: usize| {
                if !boundary[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
        }
    }
    Ok(LabeledRaster { width: w, height: h, labels, component_count: next })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank(n: usize) -> Vec<Vec<u8>> {
        vec![vec![0u8; n]; n]
    }

    #[test]
    fn one_row_gives_two() {
        let mut s = blank(9);
        s[4] = vec![1; 9];
        let l = fuse_and_label(&RasterGrid::from_rows(&s), &RasterGrid::from_rows(&blank(9))).unwrap();
        assert_eq!(l.component_count, 2);
    }

    #[test]
    fn cross_gives_four_and_obstacle_row_two_more() {
        let mut s = blank(9);
        s[4] = vec![1; 9];
        for row in s.iter_mut() {
            row[4] = 1;
        }
        let empty = RasterGrid::from_rows(&blank(9));
        let l = fuse_and_label(&RasterGrid::from_rows(&s), &empty).unwrap();
        assert_eq!(l.component_count, 4);
        let mut o = blank(9);
        o[2] = vec![1; 9];
        let l = fuse_and_label(&RasterGrid::from_rows(&s), &RasterGrid::from_rows(&o)).unwrap();
        assert_eq!(l.component_count, 6);
        assert_eq!(l.sizes()[0], 9 + 9 - 1 + 9 - 1);
    }

    #[test]
    fn dimension_mismatch() {
        let a = RasterGrid::from_rows(&blank(4));
        let b = RasterGrid::from_rows(&blank(5));
        assert!(matches!(fuse_and_label(&a, &b), Err(RasterError::DimensionMismatch(..))));
    }
}
