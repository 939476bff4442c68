//! Planar geometry on small WGS84 extents.
//!
//! Areas and distances use a local equirectangular projection anchored at a
//! reference latitude: one degree of latitude is 111.32 km and one degree of
//! longitude is 111.32·cos(lat₀) km.

mod geohash;

pub use geohash::{decode_bbox, encode, CellIndex, GeohashCell, GEOHASH_PRECISION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const KM_PER_DEGREE: f64 = 111.32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ring is not closed (first vertex != last vertex)")]
    OpenRing,
    #[error("ring has {0} vertices, at least 4 are required")]
    TooFewVertices(usize),
    #[error("ring self-intersects between segments {0} and {1}")]
    SelfIntersection(usize, usize),
    #[error("coordinate out of range: lon {lon}, lat {lat}")]
    OutOfRange { lon: f64, lat: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub lon: f64,
    pub lat: f64,
}

impl Point {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    pub fn checked(lon: f64, lat: f64) -> Result<Self, GeometryError> {
        if lon.is_finite() && lat.is_finite() && (-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat) {
            Ok(Self { lon, lat })
        } else {
            Err(GeometryError::OutOfRange { lon, lat })
        }
    }
}

/// Axis-aligned lon/lat rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BBox {
    pub fn new(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        Self { min_lon, min_lat, max_lon, max_lat }
    }

    pub fn empty() -> Self {
        Self {
            min_lon: f64::INFINITY,
            min_lat: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
            max_lat: f64::NEG_INFINITY,
        }
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.extend(p);
        }
        b
    }

    pub fn extend(&mut self, p: &Point) {
        self.min_lon = self.min_lon.min(p.lon);
        self.min_lat = self.min_lat.min(p.lat);
        self.max_lon = self.max_lon.max(p.lon);
        self.max_lat = self.max_lat.max(p.lat);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_lon: self.min_lon.min(other.min_lon),
            min_lat: self.min_lat.min(other.min_lat),
            max_lon: self.max_lon.max(other.max_lon),
            max_lat: self.max_lat.max(other.max_lat),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.lon >= self.min_lon && p.lon <= self.max_lon && p.lat >= self.min_lat && p.lat <= self.max_lat
    }

    pub fn is_empty(&self) -> bool {
        !(self.min_lon <= self.max_lon && self.min_lat <= self.max_lat)
    }

    pub fn center(&self) -> Point {
        Point::new((self.min_lon + self.max_lon) / 2.0, (self.min_lat + self.max_lat) / 2.0)
    }

    pub fn width_km(&self) -> f64 {
        (self.max_lon - self.min_lon) * KM_PER_DEGREE * self.center().lat.to_radians().cos()
    }

    pub fn height_km(&self) -> f64 {
        (self.max_lat - self.min_lat) * KM_PER_DEGREE
    }
}

/// Equirectangular projection to kilometres around an anchor point.
#[derive(Debug, Clone, Copy)]
pub struct LocalProjection {
    anchor: Point,
    km_per_lon: f64,
}

impl LocalProjection {
    pub fn new(anchor: Point) -> Self {
        Self {
            anchor,
            km_per_lon: KM_PER_DEGREE * anchor.lat.to_radians().cos(),
        }
    }

    #[inline]
    pub fn project(&self, p: &Point) -> (f64, f64) {
        (
            (p.lon - self.anchor.lon) * self.km_per_lon,
            (p.lat - self.anchor.lat) * KM_PER_DEGREE,
        )
    }

    pub fn unproject(&self, x_km: f64, y_km: f64) -> Point {
        Point::new(self.anchor.lon + x_km / self.km_per_lon, self.anchor.lat + y_km / KM_PER_DEGREE)
    }

    pub fn km_per_lon(&self) -> f64 {
        self.km_per_lon
    }
}

/// A closed ring: `points.first() == points.last()`.
pub type Ring = Vec<Point>;

/// Polyline used for road centre lines.
pub type Polyline = Vec<Point>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    exterior: Ring,
    holes: Vec<Ring>,
}

impl Polygon {
    /// Builds a polygon after checking closure, vertex count and that no two
    /// ring segments properly cross.
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Result<Self, GeometryError> {
        validate_ring(&exterior)?;
        for h in &holes {
            validate_ring(h)?;
        }
        Ok(Self { exterior, holes })
    }

    /// Axis-aligned rectangle, counter-clockwise.
    pub fn rectangle(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        Self {
            exterior: vec![
                Point::new(min_lon, min_lat),
                Point::new(max_lon, min_lat),
                Point::new(max_lon, max_lat),
                Point::new(min_lon, max_lat),
                Point::new(min_lon, min_lat),
            ],
            holes: Vec::new(),
        }
    }

    /// Skips validation. Callers guarantee a well-formed ring set.
    pub(crate) fn from_rings_unchecked(exterior: Ring, holes: Vec<Ring>) -> Self {
        Self { exterior, holes }
    }

    pub fn exterior(&self) -> &Ring {
        &self.exterior
    }

    pub fn holes(&self) -> &[Ring] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.exterior.iter())
    }

    /// Mean of the exterior vertices (closing vertex excluded).
    pub fn centroid(&self) -> Point {
        let pts = &self.exterior[..self.exterior.len().saturating_sub(1).max(1)];
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.lon, y + p.lat));
        Point::new(sx / n, sy / n)
    }

    /// Point-in-polygon with the boundary counted as inside.
    pub fn contains(&self, p: &Point) -> bool {
        match ring_location(&self.exterior, p) {
            Location::Outside => false,
            Location::Boundary => true,
            Location::Inside => {
                for h in &self.holes {
                    match ring_location(h, p) {
                        Location::Inside => return false,
                        Location::Boundary => return true,
                        Location::Outside => {}
                    }
                }
                true
            }
        }
    }

    /// True when `p` is strictly inside (not on the boundary).
    pub fn contains_interior(&self, p: &Point) -> bool {
        if ring_location(&self.exterior, p) != Location::Inside {
            return false;
        }
        self.holes.iter().all(|h| ring_location(h, p) == Location::Outside)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.rings().flat_map(|r| r.windows(2).map(|w| (w[0], w[1])))
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(Vec::len).sum()
    }
}

fn validate_ring(ring: &Ring) -> Result<(), GeometryError> {
    if ring.len() < 4 {
        return Err(GeometryError::TooFewVertices(ring.len()));
    }
    if ring.first() != ring.last() {
        return Err(GeometryError::OpenRing);
    }
    for p in ring {
        Point::checked(p.lon, p.lat)?;
    }
    let n = ring.len() - 1;
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (ring[i], ring[i + 1]);
            let (c, d) = (ring[j], ring[j + 1]);
            if segments_cross_properly((a.lon, a.lat), (b.lon, b.lat), (c.lon, c.lat), (d.lon, d.lat)) {
                return Err(GeometryError::SelfIntersection(i, j));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Location {
    Inside,
    Boundary,
    Outside,
}

fn ring_location(ring: &Ring, p: &Point) -> Location {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if point_on_segment((p.lon, p.lat), (a.lon, a.lat), (b.lon, b.lat)) {
            return Location::Boundary;
        }
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if p.lon < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

type Xy = (f64, f64);

#[inline]
fn orient(a: Xy, b: Xy, c: Xy) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn point_on_segment(p: Xy, a: Xy, b: Xy) -> bool {
    orient(a, b, p) == 0.0
        && p.0 >= a.0.min(b.0)
        && p.0 <= a.0.max(b.0)
        && p.1 >= a.1.min(b.1)
        && p.1 <= a.1.max(b.1)
}

fn segments_cross_properly(a: Xy, b: Xy, c: Xy, d: Xy) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Closed-segment intersection test (touching counts).
fn segments_intersect(a: Xy, b: Xy, c: Xy, d: Xy) -> bool {
    if segments_cross_properly(a, b, c, d) {
        return true;
    }
    point_on_segment(a, c, d) || point_on_segment(b, c, d) || point_on_segment(c, a, b) || point_on_segment(d, a, b)
}

fn point_segment_distance(p: Xy, a: Xy, b: Xy) -> (f64, Xy) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let q = (a.0 + t * dx, a.1 + t * dy);
    (((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt(), q)
}

fn signed_ring_area(ring: &Ring, proj: &LocalProjection) -> f64 {
    let mut acc = 0.0;
    for w in ring.windows(2) {
        let (x0, y0) = proj.project(&w[0]);
        let (x1, y1) = proj.project(&w[1]);
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Signed area in the lon/lat plane; positive for counter-clockwise rings.
pub fn ring_orientation(ring: &Ring) -> f64 {
    let mut acc = 0.0;
    for w in ring.windows(2) {
        acc += w[0].lon * w[1].lat - w[1].lon * w[0].lat;
    }
    acc / 2.0
}

/// Polygon area in km², holes subtracted, on a projection anchored at the
/// polygon centroid.
pub fn polygon_area_km2(p: &Polygon) -> f64 {
    let proj = LocalProjection::new(p.centroid());
    let outer = signed_ring_area(&p.exterior, &proj).abs();
    let holes: f64 = p.holes.iter().map(|h| signed_ring_area(h, &proj).abs()).sum();
    (outer - holes).max(0.0)
}

fn projected_segments(p: &Polygon, proj: &LocalProjection) -> Vec<(Xy, Xy)> {
    p.segments().map(|(a, b)| (proj.project(&a), proj.project(&b))).collect()
}

fn pair_projection(a: &Polygon, b: &Polygon) -> LocalProjection {
    let (ca, cb) = (a.centroid(), b.centroid());
    LocalProjection::new(Point::new((ca.lon + cb.lon) / 2.0, (ca.lat + cb.lat) / 2.0))
}

/// Closest pair of boundary points, in projected km, or `None` when the two
/// polygons touch or overlap.
fn closest_pair(a: &Polygon, b: &Polygon, proj: &LocalProjection) -> Option<(f64, Xy, Xy)> {
    let sa = projected_segments(a, proj);
    let sb = projected_segments(b, proj);
    for &(p, q) in &sa {
        for &(r, s) in &sb {
            if segments_intersect(p, q, r, s) {
                return None;
            }
        }
    }
    if a.contains(&b.exterior[0]) || b.contains(&a.exterior[0]) {
        return None;
    }
    let mut best = (f64::INFINITY, (0.0, 0.0), (0.0, 0.0));
    for &(p, _) in &sa {
        for &(r, s) in &sb {
            let (d, q) = point_segment_distance(p, r, s);
            if d < best.0 {
                best = (d, p, q);
            }
        }
    }
    for &(r, _) in &sb {
        for &(p, q) in &sa {
            let (d, x) = point_segment_distance(r, p, q);
            if d < best.0 {
                best = (d, x, r);
            }
        }
    }
    Some(best)
}

/// Shortest distance between two polygons in metres; 0 when they touch or
/// overlap.
pub fn min_distance_m(a: &Polygon, b: &Polygon) -> f64 {
    let proj = pair_projection(a, b);
    closest_pair(a, b, &proj).map_or(0.0, |(d, _, _)| d * 1000.0)
}

/// Lower bound on [`min_distance_m`] from bounding boxes alone, using the
/// same projection.
pub fn bbox_distance_m(a: &Polygon, b: &Polygon, ba: &BBox, bb: &BBox) -> f64 {
    let proj = pair_projection(a, b);
    let gap_lon = (ba.min_lon - bb.max_lon).max(bb.min_lon - ba.max_lon).max(0.0);
    let gap_lat = (ba.min_lat - bb.max_lat).max(bb.min_lat - ba.max_lat).max(0.0);
    let dx = gap_lon * proj.km_per_lon();
    let dy = gap_lat * KM_PER_DEGREE;
    (dx * dx + dy * dy).sqrt() * 1000.0
}

/// True iff the straight segment joining the closest boundary points of `a`
/// and `b` meets any obstacle (interior or boundary).
pub fn segment_crosses(a: &Polygon, b: &Polygon, obstacles: &[Polygon]) -> bool {
    if obstacles.is_empty() {
        return false;
    }
    let proj = pair_projection(a, b);
    let (p, q) = match closest_pair(a, b, &proj) {
        Some((_, p, q)) => (p, q),
        None => {
            // Touching polygons: use one shared boundary point.
            let x = a.exterior[0];
            let xy = proj.project(&x);
            let on = b.segments().find_map(|(r, s)| {
                let (d, q) = point_segment_distance(xy, proj.project(&r), proj.project(&s));
                (d == 0.0).then_some(q)
            });
            let pt = on.unwrap_or(xy);
            (pt, pt)
        }
    };
    let (pp, qq) = (proj.unproject(p.0, p.1), proj.unproject(q.0, q.1));
    obstacles.iter().any(|o| segment_meets_polygon(&pp, &qq, o))
}

/// Closed segment vs. closed polygon intersection.
pub fn segment_meets_polygon(p: &Point, q: &Point, poly: &Polygon) -> bool {
    if poly.contains(p) || poly.contains(q) {
        return true;
    }
    let (a, b) = ((p.lon, p.lat), (q.lon, q.lat));
    poly.segments().any(|(r, s)| segments_intersect(a, b, (r.lon, r.lat), (s.lon, s.lat)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(lon: f64, lat: f64, side: f64) -> Polygon {
        Polygon::rectangle(lon, lat, lon + side, lat + side)
    }

    #[test]
    fn degenerate_ring_has_zero_area() {
        let p = Point::new(10.0, 10.0);
        let poly = Polygon::new(vec![p, p, p, p], vec![]).unwrap();
        assert_eq!(polygon_area_km2(&poly), 0.0);
    }

    #[test]
    fn equator_square_area() {
        let a = polygon_area_km2(&square(0.0, -0.005, 0.01));
        assert!((a - 1.2366).abs() / 1.2366 < 0.01, "{a}");
        let exact = (0.01 * 111.32_f64).powi(2);
        assert!((a - exact).abs() < 1e-9);
    }

    #[test]
    fn hole_removes_a_quarter() {
        let outer = square(0.0, 0.0, 0.02);
        let hole = square(0.005, 0.005, 0.01);
        let with_hole = Polygon::new(outer.exterior().clone(), vec![hole.exterior().clone()]).unwrap();
        let ratio = polygon_area_km2(&with_hole) / polygon_area_km2(&outer);
        assert!((ratio - 0.75).abs() < 1e-9);
    }

    #[test]
    fn ring_validation() {
        let open = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        assert_eq!(Polygon::new(open, vec![]), Err(GeometryError::OpenRing));
        let short = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 0.0)];
        assert_eq!(Polygon::new(short, vec![]), Err(GeometryError::TooFewVertices(3)));
        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 0.0),
        ];
        assert!(matches!(Polygon::new(bowtie, vec![]), Err(GeometryError::SelfIntersection(_, _))));
    }

    #[test]
    fn distance_cases() {
        let a = square(0.0, 0.0, 0.01);
        assert_eq!(min_distance_m(&a, &a), 0.0);
        let b = square(0.011, 0.0, 0.01);
        let d = min_distance_m(&a, &b);
        assert!((d - 111.32).abs() / 111.32 < 0.01, "{d}");
        assert_eq!(d, min_distance_m(&b, &a));
        let touching = square(0.01, 0.0, 0.01);
        assert_eq!(min_distance_m(&a, &touching), 0.0);
        let inner = square(0.002, 0.002, 0.001);
        assert_eq!(min_distance_m(&a, &inner), 0.0);
    }

    #[test]
    fn obstacle_between_squares() {
        let a = square(0.0, 0.0, 0.01);
        let b = square(0.0, 0.012, 0.01);
        let river = Polygon::rectangle(-0.05, 0.0105, 0.05, 0.0115);
        assert!(segment_crosses(&a, &b, std::slice::from_ref(&river)));
        assert!(!segment_crosses(&a, &b, &[]));
        let far = Polygon::rectangle(1.0, 1.0, 1.01, 1.01);
        assert!(!segment_crosses(&a, &b, &[far]));
    }

    #[test]
    fn contains_boundary_and_holes() {
        let outer = square(0.0, 0.0, 2.0);
        let hole = square(0.5, 0.5, 1.0);
        let p = Polygon::new(outer.exterior().clone(), vec![hole.exterior().clone()]).unwrap();
        assert!(p.contains(&Point::new(0.25, 0.25)));
        assert!(!p.contains(&Point::new(1.0, 1.0)));
        assert!(p.contains(&Point::new(0.5, 1.0)));
        assert!(p.contains(&Point::new(0.0, 1.0)));
        assert!(!p.contains_interior(&Point::new(0.0, 1.0)));
        assert!(!p.contains(&Point::new(3.0, 1.0)));
    }
}
