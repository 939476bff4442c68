//! Obstacle-aware road-map segmentation on a binary raster: rasterize roads
//! and obstacles, dilate and thin the road layer, fuse it with the obstacle
//! layer, label the remaining background and trace each component back into
//! a polygon.

mod label;
mod morphology;
mod pgm;
mod vectorize;

pub use label::{fuse_and_label, LabeledRaster};
pub use morphology::{dilate, thin};
pub use pgm::{labels_to_pgm, to_pgm};
pub use vectorize::vectorize;

use crate::geometry::{BBox, Point, Polygon, Polyline};
use thiserror::Error;

/// Minimum raster size per axis.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("no road or obstacle geometry to rasterize")]
    EmptyGeometry,
    #[error("resolution {width}x{height} is below the minimum of {MIN_RESOLUTION} per axis")]
    ResolutionTooLow { width: usize, height: usize },
    #[error("dilation kernel {0} is not odd")]
    EvenKernel(usize),
    #[error("raster dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("invalid raster extent")]
    InvalidExtent,
}

/// Maps pixel-corner coordinates to lon/lat. Pixel `(col, row)` spans
/// `[lon0 + col·dx, lon0 + (col+1)·dx] × [lat0 − (row+1)·dy, lat0 − row·dy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTransform {
    pub lon0: f64,
    pub lat0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl GeoTransform {
    /// Transform whose raster of `width × height` pixels exactly covers `bbox`.
    pub fn covering(bbox: &BBox, width: usize, height: usize) -> Self {
        Self {
            lon0: bbox.min_lon,
            lat0: bbox.max_lat,
            dx: (bbox.max_lon - bbox.min_lon) / width as f64,
            dy: (bbox.max_lat - bbox.min_lat) / height as f64,
        }
    }

    /// Geographic position of pixel corner `(x, y)`.
    pub fn corner(&self, x: f64, y: f64) -> Point {
        Point::new(self.lon0 + x * self.dx, self.lat0 - y * self.dy)
    }

    /// Continuous pixel coordinates of a point.
    pub fn to_pixel(&self, p: &Point) -> (f64, f64) {
        ((p.lon - self.lon0) / self.dx, (self.lat0 - p.lat) / self.dy)
    }
}

/// Binary raster; 1 marks road or obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub geo: GeoTransform,
}

impl RasterGrid {
    pub fn zeros(width: usize, height: usize, geo: GeoTransform) -> Self {
        Self { width, height, pixels: vec![0; width * height], geo }
    }

    /// Builds a raster from rows of 0/1 values with a unit transform.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == width), "ragged rows");
        let pixels = rows.iter().flatten().map(|&v| u8::from(v != 0)).collect();
        Self { width, height, pixels, geo: GeoTransform { lon0: 0.0, lat0: 0.0, dx: 1e-4, dy: 1e-4 } }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Value at signed coordinates, 0 outside the raster.
    pub fn at(&self, x: i64, y: i64) -> u8 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0
        } else {
            self.pixels[y as usize * self.width + x as usize]
        }
    }

    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&v| v != 0).count()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Rasterizes road polylines (Bresenham between vertex pixels) and obstacle
/// polygons (pixels whose center is inside, or whose cell an obstacle edge
/// passes through) onto a `width × height` raster covering `bbox`.
pub fn rasterize(
    roads: &[Polyline],
    obstacles: &[Polygon],
    bbox: &BBox,
    width: usize,
    height: usize,
) -> Result<(RasterGrid, RasterGrid), RasterError> {
    if roads.iter().all(|r| r.is_empty()) && obstacles.is_empty() {
        return Err(RasterError::EmptyGeometry);
    }
    if width < MIN_RESOLUTION || height < MIN_RESOLUTION {
        return Err(RasterError::ResolutionTooLow { width, height });
    }
    if bbox.is_empty() || !(bbox.max_lon > bbox.min_lon && bbox.max_lat > bbox.min_lat) {
        return Err(RasterError::InvalidExtent);
    }
    let geo = GeoTransform::covering(bbox, width, height);
    let mut road = RasterGrid::zeros(width, height, geo);
    for line in roads {
        let cells: Vec<(i64, i64)> = line.iter().map(|p| pixel_of(&geo, p, width, height)).collect();
        if let [only] = cells.as_slice() {
            set_checked(&mut road, only.0, only.1);
        }
        for w in cells.windows(2) {
            bresenham(w[0], w[1], |x, y| set_checked(&mut road, x, y));
        }
    }
    let mut obstacle = RasterGrid::zeros(width, height, geo);
    for poly in obstacles {
        burn_polygon(&mut obstacle, poly);
    }
    Ok((road, obstacle))
}

/// Pixel containing `p`; a point exactly on the far raster edge maps into the
/// last pixel.
fn pixel_of(geo: &GeoTransform, p: &Point, width: usize, height: usize) -> (i64, i64) {
    let (fx, fy) = geo.to_pixel(p);
    let clamp_edge = |v: f64, n: usize| {
        let i = v.floor() as i64;
        if i == n as i64 && v == n as f64 {
            i - 1
        } else {
            i
        }
    };
    (clamp_edge(fx, width), clamp_edge(fy, height))
}

fn set_checked(r: &mut RasterGrid, x: i64, y: i64) {
    if x >= 0 && y >= 0 && (x as usize) < r.width && (y as usize) < r.height {
        r.set(x as usize, y as usize, 1);
    }
}

fn bresenham((mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), mut plot: impl FnMut(i64, i64)) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(x0, y0);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn burn_polygon(r: &mut RasterGrid, poly: &Polygon) {
    let geo = r.geo;
    let (w, h) = (r.width as i64, r.height as i64);
    let bb = poly.bbox();
    let (ax, ay) = geo.to_pixel(&Point::new(bb.min_lon, bb.max_lat));
    let (bx, by) = geo.to_pixel(&Point::new(bb.max_lon, bb.min_lat));
    let (x0, x1) = ((ax.floor() as i64).max(0), (bx.floor() as i64).min(w - 1));
    let (y0, y1) = ((ay.floor() as i64).max(0), (by.floor() as i64).min(h - 1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            if poly.contains(&geo.corner(x as f64 + 0.5, y as f64 + 0.5)) {
                r.set(x as usize, y as usize, 1);
            }
        }
    }
    for (a, b) in poly.segments() {
        supercover(geo.to_pixel(&a), geo.to_pixel(&b), |x, y| set_checked(r, x, y));
    }
}

/// Visits every cell a continuous segment passes through.
fn supercover(a: (f64, f64), b: (f64, f64), mut visit: impl FnMut(i64, i64)) {
    let (mut x, mut y) = (a.0.floor() as i64, a.1.floor() as i64);
    let (ex, ey) = (b.0.floor() as i64, b.1.floor() as i64);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let sx: i64 = if dx > 0.0 { 1 } else { -1 };
    let sy: i64 = if dy > 0.0 { 1 } else { -1 };
    let next_boundary = |p: f64, s: i64| if s > 0 { p.floor() + 1.0 } else { p.ceil() - 1.0 };
    let (mut tx, step_x) = if dx != 0.0 {
        let bx = if sx > 0 { next_boundary(a.0, 1) } else { a.0.floor() };
        ((bx - a.0) / dx, 1.0 / dx.abs())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let (mut ty, step_y) = if dy != 0.0 {
        let by = if sy > 0 { next_boundary(a.1, 1) } else { a.1.floor() };
        ((by - a.1) / dy, 1.0 / dy.abs())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    visit(x, y);
    let max_steps = (ex - x).abs() + (ey - y).abs() + 2;
    for _ in 0..max_steps {
        if x == ex && y == ey {
            break;
        }
        if tx > 1.0 && ty > 1.0 {
            break;
        }
        if tx < ty {
            x += sx;
            tx += step_x;
        } else if ty < tx {
            y += sy;
            ty += step_y;
        } else {
            // Passing exactly through a corner touches both side cells.
            visit(x + sx, y);
            visit(x, y + sy);
            x += sx;
            y += sy;
            tx += step_x;
            ty += step_y;
        }
        visit(x, y);
    }
}

/// Output of the full segmentation pipeline.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labeled: LabeledRaster,
    /// `(component id, polygon)` pairs ordered by component id.
    pub elements: Vec<(u32, Polygon)>,
}

/// Rasterize → dilate roads → thin roads → fuse with obstacles → label →
/// vectorize.
pub fn segment(
    roads: &[Polyline],
    obstacles: &[Polygon],
    bbox: &BBox,
    width: usize,
    height: usize,
    kernel: usize,
) -> Result<Segmentation, RasterError> {
    let (road, obstacle) = rasterize(roads, obstacles, bbox, width, height)?;
    let skeleton = thin(&dilate(&road, kernel)?);
    let labeled = fuse_and_label(&skeleton, &obstacle)?;
    let elements = vectorize(&labeled, &road.geo);
    Ok(Segmentation { labeled, elements })
}
