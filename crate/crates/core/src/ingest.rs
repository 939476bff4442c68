//! Input parsing (service records, road/obstacle geometry, configuration)
//! and binning of records into a demand matrix.

use crate::geometry::{BBox, CellIndex, Point, Polygon, Polyline, GEOHASH_PRECISION};
use crate::metrics::{cells_in_polygon, DemandMatrix};
use chrono::{DateTime, SecondsFormat, Utc};
use geojson::{Feature, FeatureCollection, GeoJson, Geometry, JsonObject, Value};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable { path: PathBuf, source: std::io::Error },
    #[error("all {rows} data rows are malformed")]
    AllRowsMalformed { rows: usize },
    #[error("invalid GeoJSON: {0}")]
    InvalidJson(String),
    #[error("geometry contains no road features")]
    NoRoads,
    #[error("time range is empty (t0 = {t0}, t_end = {t_end})")]
    EmptyTimeRange { t0: i64, t_end: i64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One service event: when (Unix seconds, UTC) and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceRecord {
    pub timestamp: i64,
    pub location: Point,
}

/// Parsed records plus counts of skipped rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordSet {
    pub records: Vec<ServiceRecord>,
    /// Rows that failed to parse.
    pub malformed: usize,
    /// Rows with invalid coordinates or outside the bounding box.
    pub out_of_bounds: usize,
}

#[derive(Deserialize)]
struct RecordRow {
    timestamp: String,
    lat: f64,
    lon: f64,
}

/// Reads a `timestamp,lat,lon` CSV with RFC 3339 timestamps.
pub fn parse_records(path: &Path, bbox: Option<&BBox>) -> Result<RecordSet, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::FileUnreadable { path: path.into(), source })?;
    read_records(file, bbox)
}

/// [`parse_records`] over any reader.
pub fn read_records(reader: impl Read, bbox: Option<&BBox>) -> Result<RecordSet, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = RecordSet::default();
    let mut rows = 0;
    for row in rdr.deserialize::<RecordRow>() {
        rows += 1;
        let parsed = row.ok().and_then(|r| {
            DateTime::parse_from_rfc3339(&r.timestamp).ok().map(|t| (t.with_timezone(&Utc).timestamp(), r.lat, r.lon))
        });
        let Some((timestamp, lat, lon)) = parsed else {
            out.malformed += 1;
            continue;
        };
        match Point::checked(lon, lat) {
            Ok(p) if bbox.is_none_or(|b| b.contains(&p)) => {
                out.records.push(ServiceRecord { timestamp, location: p });
            }
            _ => out.out_of_bounds += 1,
        }
    }
    if rows > 0 && out.malformed == rows {
        return Err(IngestError::AllRowsMalformed { rows });
    }
    Ok(out)
}

/// Writes records as `timestamp,lat,lon` CSV with second-precision UTC
/// timestamps.
pub fn write_records(writer: impl Write, records: &[ServiceRecord]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "lat", "lon"])?;
    for r in records {
        let t = DateTime::<Utc>::from_timestamp(r.timestamp, 0)
            .ok_or_else(|| IngestError::Config(format!("timestamp {} out of range", r.timestamp)))?;
        w.write_record([
            t.to_rfc3339_opts(SecondsFormat::Secs, true),
            format!("{:.7}", r.location.lat),
            format!("{:.7}", r.location.lon),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Roads and obstacles read from GeoJSON.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeometrySet {
    pub roads: Vec<Polyline>,
    pub obstacles: Vec<Polygon>,
    /// Features skipped for a missing/unknown kind, a kind that does not fit
    /// the geometry type, or invalid coordinates.
    pub skipped: usize,
}

impl GeometrySet {
    pub fn bbox(&self) -> BBox {
        let mut b = BBox::empty();
        for p in self.roads.iter().flatten().chain(self.obstacles.iter().flat_map(|o| o.exterior().iter())) {
            b.extend(p);
        }
        b
    }
}

/// Reads a FeatureCollection of `kind: road` line strings and
/// `kind: obstacle` polygons.
pub fn parse_geometry(path: &Path) -> Result<GeometrySet, IngestError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| IngestError::FileUnreadable { path: path.into(), source })?;
    parse_geometry_str(&text)
}

/// [`parse_geometry`] over an in-memory document.
pub fn parse_geometry_str(text: &str) -> Result<GeometrySet, IngestError> {
    let gj: GeoJson = text.parse().map_err(|e: geojson::Error| IngestError::InvalidJson(e.to_string()))?;
    let GeoJson::FeatureCollection(fc) = gj else {
        return Err(IngestError::InvalidJson("expected a FeatureCollection".into()));
    };
    let mut out = GeometrySet::default();
    for f in fc.features {
        let kind = f.property("kind").and_then(|k| k.as_str()).map(str::to_owned);
        let Some(value) = f.geometry.map(|g| g.value) else {
            out.skipped += 1;
            continue;
        };
        let ok = match (kind.as_deref(), value) {
            (Some("road"), Value::LineString(l)) => push_line(&mut out.roads, &l),
            (Some("road"), Value::MultiLineString(ls)) => ls.iter().all(|l| push_line(&mut out.roads, l)),
            (Some("obstacle"), Value::Polygon(rings)) => push_polygon(&mut out.obstacles, &rings),
            (Some("obstacle"), Value::MultiPolygon(parts)) => {
                parts.iter().all(|rings| push_polygon(&mut out.obstacles, rings))
            }
            _ => false,
        };
        if !ok {
            out.skipped += 1;
        }
    }
    if out.skipped > 0 {
        log::warn!("skipped {} geometry features", out.skipped);
    }
    if out.roads.is_empty() {
        return Err(IngestError::NoRoads);
    }
    Ok(out)
}

fn to_points(coords: &[Vec<f64>]) -> Option<Vec<Point>> {
    coords.iter().map(|c| if c.len() >= 2 { Point::checked(c[0], c[1]).ok() } else { None }).collect()
}

fn push_line(roads: &mut Vec<Polyline>, coords: &[Vec<f64>]) -> bool {
    match to_points(coords) {
        Some(pts) if pts.len() >= 2 => {
            roads.push(pts);
            true
        }
        _ => false,
    }
}

fn push_polygon(obstacles: &mut Vec<Polygon>, rings: &[Vec<Vec<f64>>]) -> bool {
    let Some(mut rings) = rings.iter().map(|r| to_points(r)).collect::<Option<Vec<_>>>() else {
        return false;
    };
    if rings.is_empty() {
        return false;
    }
    let exterior = rings.remove(0);
    match Polygon::new(exterior, rings) {
        Ok(p) => {
            obstacles.push(p);
            true
        }
        Err(_) => false,
    }
}

fn coords(points: &[Point]) -> Vec<Vec<f64>> {
    points.iter().map(|p| vec![p.lon, p.lat]).collect()
}

/// GeoJSON polygon coordinates of a polygon (exterior first).
pub fn polygon_coordinates(p: &Polygon) -> Vec<Vec<Vec<f64>>> {
    p.rings().map(|r| coords(r)).collect()
}

/// A feature with the given geometry and properties.
pub fn feature(value: Value, properties: JsonObject) -> Feature {
    Feature {
        bbox: None,
        geometry: Some(Geometry::new(value)),
        id: None,
        properties: Some(properties),
        foreign_members: None,
    }
}

/// Serializes features as a FeatureCollection document.
pub fn feature_collection(features: Vec<Feature>) -> String {
    let fc = FeatureCollection { bbox: None, features, foreign_members: None };
    let mut s = GeoJson::FeatureCollection(fc).to_string();
    s.push('\n');
    s
}

/// GeoJSON document for a road/obstacle set.
pub fn geometry_to_geojson(geometry: &GeometrySet) -> String {
    let kind = |k: &str| {
        let mut props = JsonObject::new();
        props.insert("kind".into(), k.into());
        props
    };
    let features = geometry
        .roads
        .iter()
        .map(|r| feature(Value::LineString(coords(r)), kind("road")))
        .chain(geometry.obstacles.iter().map(|o| feature(Value::Polygon(polygon_coordinates(o)), kind("obstacle"))))
        .collect();
    feature_collection(features)
}

/// Settings for the whole pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Demand binning interval in minutes; must divide a day.
    pub interval_minutes: u32,
    /// Minimum mean daily demand for an element to be clustered.
    pub alpha: f64,
    /// Adjacency distance for the aggregatable graph, metres.
    pub tau_m: f64,
    /// Maximum region area, km².
    pub max_area_km2: f64,
    /// Elements with a higher daily ACF stay standalone.
    pub acf_threshold: f64,
    /// Side of the square road dilation kernel, pixels (odd).
    pub dilation_kernel: usize,
    /// Raster pixel size, metres.
    pub pixel_m: f64,
    /// Probability of refining the best-predictability solution.
    pub w: f64,
    /// Greedy initializer's ACF weight.
    pub lambda: f64,
    /// Move-evaluation budget of the co-optimizer.
    pub eps: usize,
    /// ACF lag in intervals.
    pub acf_lag: usize,
    /// D-Balance imbalance tolerance.
    pub imbalance: f64,
    pub seed: u64,
    /// City bounding box `[min_lon, min_lat, max_lon, max_lat]`; defaults to
    /// the geometry's extent.
    pub bbox: Option<[f64; 4]>,
    /// Target retained-demand share for MAPE@recall.
    pub recall_target: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            interval_minutes: 60,
            alpha: 1.0,
            tau_m: 50.0,
            max_area_km2: 5.0,
            acf_threshold: 0.5,
            dilation_kernel: 5,
            pixel_m: 20.0,
            w: 0.7,
            lambda: 0.7,
            eps: 10_000,
            acf_lag: 24,
            imbalance: 0.05,
            seed: 0,
            bbox: None,
            recall_target: 0.95,
        }
    }
}

/// File form of [`PipelineConfig`]: every key optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub interval_minutes: Option<u32>,
    pub alpha: Option<f64>,
    pub tau_m: Option<f64>,
    pub max_area_km2: Option<f64>,
    pub acf_threshold: Option<f64>,
    pub dilation_kernel: Option<usize>,
    pub pixel_m: Option<f64>,
    pub w: Option<f64>,
    pub lambda: Option<f64>,
    pub eps: Option<usize>,
    pub acf_lag: Option<usize>,
    pub imbalance: Option<f64>,
    pub seed: Option<u64>,
    pub bbox: Option<[f64; 4]>,
    pub recall_target: Option<f64>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::Config(e.to_string()))
    }
}

impl PipelineConfig {
    /// Defaults overlaid with `file`, then validated.
    pub fn from_overrides(file: &ConfigOverrides) -> Result<Self, IngestError> {
        let mut c = Self::default();
        c.apply(file);
        c.validate()?;
        Ok(c)
    }

    /// Reads a TOML key/value file over the defaults.
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| IngestError::FileUnreadable { path: path.into(), source })?;
        Self::from_overrides(&ConfigOverrides::from_toml(&text)?)
    }

    /// Overlays every key present in `o`.
    pub fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        set!(interval_minutes, alpha, tau_m, max_area_km2, acf_threshold, dilation_kernel, pixel_m, w, lambda, eps);
        set!(acf_lag, imbalance, seed, recall_target);
        if o.bbox.is_some() {
            self.bbox = o.bbox;
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |m: String| Err(IngestError::Config(m));
        if self.interval_minutes == 0 || 1440 % self.interval_minutes != 0 {
            return fail(format!("interval_minutes = {} does not divide a day", self.interval_minutes));
        }
        for (name, v) in [("tau_m", self.tau_m), ("max_area_km2", self.max_area_km2), ("pixel_m", self.pixel_m)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.alpha >= 0.0) || !(self.imbalance >= 0.0) {
            return fail("alpha and imbalance must be nonnegative".into());
        }
        for (name, v) in [("w", self.w), ("lambda", self.lambda), ("recall_target", self.recall_target)] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.dilation_kernel.is_multiple_of(2) {
            return fail(format!("dilation_kernel = {} must be odd", self.dilation_kernel));
        }
        if self.eps == 0 || self.acf_lag == 0 {
            return fail("eps and acf_lag must be positive".into());
        }
        if let Some([a, b, c, d]) = self.bbox {
            if !(a < c && b < d) {
                return fail("bbox must be [min_lon, min_lat, max_lon, max_lat]".into());
            }
        }
        Ok(())
    }

    pub fn bbox(&self) -> Option<BBox> {
        self.bbox.map(|[a, b, c, d]| BBox::new(a, b, c, d))
    }
}

/// Uniform-grid bucket index over polygon bounding boxes for point lookup.
#[derive(Debug, Clone)]
pub struct PolygonIndex<'a> {
    polygons: &'a [Polygon],
    bounds: BBox,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PolygonIndex<'a> {
    pub fn new(polygons: &'a [Polygon]) -> Self {
        let boxes: Vec<BBox> = polygons.iter().map(Polygon::bbox).collect();
        let bounds = boxes.iter().fold(BBox::empty(), |a, b| a.union(b));
        let side = ((polygons.len() as f64).sqrt().ceil() as usize).max(1);
        let (nx, ny) = (side, side);
        let mut index = Self { polygons, bounds, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for (i, b) in boxes.iter().enumerate() {
            let (x0, y0) = index.cell(b.min_lon, b.min_lat);
            let (x1, y1) = index.cell(b.max_lon, b.max_lat);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    index.buckets[y * nx + x].push(i);
                }
            }
        }
        index
    }

    fn cell(&self, lon: f64, lat: f64) -> (usize, usize) {
        let b = &self.bounds;
        let fx = if b.max_lon > b.min_lon { (lon - b.min_lon) / (b.max_lon - b.min_lon) } else { 0.0 };
        let fy = if b.max_lat > b.min_lat { (lat - b.min_lat) / (b.max_lat - b.min_lat) } else { 0.0 };
        let clamp = |f: f64, n: usize| ((f * n as f64).floor().max(0.0) as usize).min(n - 1);
        (clamp(fx, self.nx), clamp(fy, self.ny))
    }

    /// Lowest-index polygon containing `p` (boundary inclusive).
    pub fn locate(&self, p: &Point) -> Option<usize> {
        if self.polygons.is_empty() || !self.bounds.contains(p) {
            return None;
        }
        let (x, y) = self.cell(p.lon, p.lat);
        // Buckets list polygons in ascending index order.
        self.buckets[y * self.nx + x].iter().copied().find(|&i| self.polygons[i].contains(p))
    }
}

/// Demand matrix plus records that fell outside every element or outside
/// the time range.
#[derive(Debug, Clone, PartialEq)]
pub struct Binned {
    pub matrix: DemandMatrix,
    pub unassigned: usize,
    pub out_of_range: usize,
}

/// Counts records per `(interval, element)`. Intervals start at `t0` and
/// cover `[t0, t_end)`; a record on a shared element boundary counts for the
/// lowest element index.
pub fn bin_records(
    records: &[ServiceRecord],
    elements: &[Polygon],
    interval_minutes: u32,
    t0: i64,
    t_end: i64,
) -> Result<Binned, IngestError> {
    if t0 >= t_end {
        return Err(IngestError::EmptyTimeRange { t0, t_end });
    }
    if interval_minutes == 0 {
        return Err(IngestError::Config("interval_minutes must be positive".into()));
    }
    let step = interval_minutes as i64 * 60;
    let intervals = ((t_end - t0 + step - 1) / step) as usize;
    let mut columns = vec![vec![0.0; intervals]; elements.len()];
    let index = PolygonIndex::new(elements);
    let (mut unassigned, mut out_of_range) = (0, 0);
    for r in records {
        if r.timestamp < t0 || r.timestamp >= t_end {
            out_of_range += 1;
            continue;
        }
        let t = ((r.timestamp - t0) / step) as usize;
        match index.locate(&r.location) {
            Some(i) => columns[i][t] += 1.0,
            None => unassigned += 1,
        }
    }
    let matrix = if elements.is_empty() {
        DemandMatrix::zeros(intervals, 0, interval_minutes, t0)
    } else {
        DemandMatrix::from_columns(columns, interval_minutes, t0).expect("equal-length columns")
    };
    Ok(Binned { matrix, unassigned, out_of_range })
}

/// Per element, `(serviced cells, total cells)` at geohash precision 8: the
/// cells whose center lies in the element, and how many of them contain a
/// record.
pub fn serviced_cells(records: &[ServiceRecord], elements: &[Polygon]) -> Vec<(usize, usize)> {
    let visited: HashSet<CellIndex> = records.iter().map(|r| CellIndex::of(&r.location, GEOHASH_PRECISION)).collect();
    elements
        .iter()
        .map(|poly| {
            let cells = cells_in_polygon(poly);
            (cells.iter().filter(|c| visited.contains(c)).count(), cells.len())
        })
        .collect()
}
