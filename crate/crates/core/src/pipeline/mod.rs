//! End-to-end flow: segment the road map into atomic elements, bin demand,
//! build the aggregatable graph, estimate the cluster scale, co-optimize,
//! and export regions.

pub mod evaluate;
pub mod scalability;
pub mod synth;

use crate::geometry::{polygon_area_km2, BBox, Polygon};
use crate::graph::{build_edges, filter_elements, mark_standalone, AtomicElement, GraphError};
use crate::ingest::{
    bin_records, feature, feature_collection, polygon_coordinates, serviced_cells, GeometrySet, IngestError,
    PipelineConfig, ServiceRecord,
};
use crate::metrics::{acf_or_none, daily_lag, DemandMatrix, MetricsError};
use crate::optimize::{co_optimize, OptimizeError, OptimizeOutcome, OptimizerConfig, TraceRow};
use crate::partition::{
    d_balance, estimate_cluster_scale, fluid_grow, greedy_grow, ClusterProblem, ClusterSolution, PartitionError,
    Violation,
};
use crate::raster::{segment, RasterError, MIN_RESOLUTION};
use geojson::{GeoJson, JsonObject, Value};
use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("no feasible regionalization: {0}")]
    Infeasible(String),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error("malformed input: {0}")]
    Format(String),
}

impl From<OptimizeError> for PipelineError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::EmptyInitialSet => Self::Infeasible(e.to_string()),
            OptimizeError::InvalidConfig(m) => Self::Config(m),
            other => Self::Infeasible(other.to_string()),
        }
    }
}

impl PipelineError {
    /// Process exit code: 2 configuration, 3 infeasible, 4 I/O or input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Synth(_) => 2,
            Self::Ingest(IngestError::Config(_)) => 2,
            Self::Infeasible(_) | Self::Partition(_) => 3,
            Self::Graph(GraphError::AllFiltered { .. }) => 3,
            _ => 4,
        }
    }
}

/// A segmented atomic element.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub polygon: Polygon,
}

/// Raster dimensions giving roughly `pixel_m` pixels over `bbox`.
pub fn raster_size(bbox: &BBox, pixel_m: f64) -> (usize, usize) {
    let w = (bbox.width_km() * 1000.0 / pixel_m).ceil() as usize;
    let h = (bbox.height_km() * 1000.0 / pixel_m).ceil() as usize;
    (w.max(MIN_RESOLUTION), h.max(MIN_RESOLUTION))
}

/// City extent: the configured box, else the geometry's extent.
pub fn city_bbox(cfg: &PipelineConfig, geometry: &GeometrySet) -> BBox {
    cfg.bbox().unwrap_or_else(|| geometry.bbox())
}

/// Road/obstacle-bounded atomic elements, numbered from 0 in label order.
///
/// The raster extends a few pixels past the city box so that roads on the
/// box edge thin to interior lines; components with at most half of their
/// pixels inside the box (the strip outside a border road) are dropped.
pub fn segment_city(cfg: &PipelineConfig, geometry: &GeometrySet) -> Result<Vec<Element>, PipelineError> {
    let bbox = city_bbox(cfg, geometry);
    let (w, h) = raster_size(&bbox, cfg.pixel_m);
    let pad = cfg.dilation_kernel + 2;
    let dx = (bbox.max_lon - bbox.min_lon) / w as f64;
    let dy = (bbox.max_lat - bbox.min_lat) / h as f64;
    let (p, pw, ph) = (pad as f64, w + 2 * pad, h + 2 * pad);
    let padded =
        BBox::new(bbox.min_lon - p * dx, bbox.min_lat - p * dy, bbox.max_lon + p * dx, bbox.max_lat + p * dy);
    let seg = segment(&geometry.roads, &geometry.obstacles, &padded, pw, ph, cfg.dilation_kernel)?;
    let mut inside = vec![0usize; seg.labeled.component_count as usize + 1];
    for y in pad..pad + h {
        for x in pad..pad + w {
            inside[seg.labeled.get(x, y) as usize] += 1;
        }
    }
    let sizes = seg.labeled.sizes();
    Ok(seg
        .elements
        .into_iter()
        .filter(|(label, _)| 2 * inside[*label as usize] > sizes[*label as usize])
        .enumerate()
        .map(|(id, (_, polygon))| Element { id, polygon })
        .collect())
}

fn polygon_value(p: &Polygon) -> Value {
    Value::Polygon(polygon_coordinates(p))
}

/// `elements.geojson`: one polygon feature per element with `id` and
/// `area_km2`.
pub fn elements_to_geojson(elements: &[Element]) -> String {
    let features = elements
        .iter()
        .map(|e| {
            let mut props = JsonObject::new();
            props.insert("id".into(), e.id.into());
            props.insert("area_km2".into(), polygon_area_km2(&e.polygon).into());
            feature(polygon_value(&e.polygon), props)
        })
        .collect();
    feature_collection(features)
}

/// Reads an elements document written by [`elements_to_geojson`].
pub fn parse_elements(text: &str) -> Result<Vec<Element>, PipelineError> {
    let fc = feature_collection_of(text, "elements")?;
    let mut out = Vec::new();
    for f in fc.features {
        let id = f
            .property("id")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| PipelineError::Format("element without integer id".into()))? as usize;
        let Some(Value::Polygon(rings)) = f.geometry.map(|g| g.value) else {
            return Err(PipelineError::Format(format!("element {id} is not a polygon")));
        };
        let polygon = polygon_from_rings(&rings, &format!("element {id}"))?;
        out.push(Element { id, polygon });
    }
    Ok(out)
}

fn polygon_from_rings(rings: &[Vec<Vec<f64>>], what: &str) -> Result<Polygon, PipelineError> {
    let mut rings = rings
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| match c.as_slice() {
                    [x, y, ..] => crate::geometry::Point::checked(*x, *y).map_err(|e| e.to_string()),
                    _ => Err("position with fewer than two coordinates".to_owned()),
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::Format(format!("{what}: {e}")))?;
    if rings.is_empty() {
        return Err(PipelineError::Format(format!("{what} has no rings")));
    }
    let exterior = rings.remove(0);
    Polygon::new(exterior, rings).map_err(|e| PipelineError::Format(format!("{what}: {e}")))
}

fn feature_collection_of(text: &str, what: &str) -> Result<geojson::FeatureCollection, PipelineError> {
    match text.parse::<GeoJson>() {
        Ok(GeoJson::FeatureCollection(fc)) => Ok(fc),
        Ok(_) => Err(PipelineError::Format(format!("{what}: expected a FeatureCollection"))),
        Err(e) => Err(PipelineError::Format(format!("{what}: {e}"))),
    }
}

/// `(region_id, polygons)` from a regions document; Polygon and
/// MultiPolygon geometries are accepted.
pub fn parse_region_polygons(text: &str) -> Result<Vec<(usize, Vec<Polygon>)>, PipelineError> {
    let fc = feature_collection_of(text, "regions")?;
    fc.features
        .into_iter()
        .map(|f| {
            let id = f
                .property("region_id")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| PipelineError::Format("region without integer region_id".into()))?
                as usize;
            let what = format!("region {id}");
            let parts = match f.geometry.map(|g| g.value) {
                Some(Value::Polygon(rings)) => vec![polygon_from_rings(&rings, &what)?],
                Some(Value::MultiPolygon(polys)) => {
                    polys.iter().map(|rings| polygon_from_rings(rings, &what)).collect::<Result<_, _>>()?
                }
                _ => return Err(PipelineError::Format(format!("{what} is not a polygon"))),
            };
            Ok((id, parts))
        })
        .collect()
}

/// Lookup form of a regions document: one Polygon feature per region part,
/// carrying the region's id and scalar properties (member lists dropped),
/// so any point-in-polygon tool can map a location to its region.
pub fn export_lookup(regions_text: &str) -> Result<String, PipelineError> {
    let fc = feature_collection_of(regions_text, "regions")?;
    let regions = parse_region_polygons(regions_text)?;
    let mut features = Vec::new();
    for (f, (_, parts)) in fc.features.iter().zip(&regions) {
        let mut props = JsonObject::new();
        for (k, v) in f.properties.iter().flatten() {
            if k != "members" {
                props.insert(k.clone(), v.clone());
            }
        }
        for p in parts {
            features.push(feature(polygon_value(p), props.clone()));
        }
    }
    Ok(feature_collection(features))
}

/// Whole-day train / validation / test split of the record span. Interval
/// indices are relative to `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeSplit {
    /// UTC midnight at or before the first record.
    pub t0: i64,
    pub interval_minutes: u32,
    pub intervals: usize,
    /// Training covers `[0, train_end)`.
    pub train_end: usize,
    /// Validation covers `[train_end, validation_end)`; test the rest.
    pub validation_end: usize,
}

const DAY: i64 = 86_400;

impl TimeSplit {
    /// The last 10% of days (at least one) are the test window and the 10%
    /// before them the validation window; at least two training days remain.
    pub fn of(records: &[ServiceRecord], interval_minutes: u32) -> Result<Self, PipelineError> {
        let per_day = daily_lag(interval_minutes)?;
        let (lo, hi) = records
            .iter()
            .fold((i64::MAX, i64::MIN), |(lo, hi), r| (lo.min(r.timestamp), hi.max(r.timestamp)));
        if records.is_empty() {
            return Err(PipelineError::Config("no service records".into()));
        }
        let t0 = lo.div_euclid(DAY) * DAY;
        let days = ((hi - t0) / DAY + 1) as usize;
        let held = ((days as f64 * 0.1).round() as usize).max(1);
        if days < 2 * held + 2 {
            return Err(PipelineError::Config(format!("{days} days of records are too few to split")));
        }
        let train_days = days - 2 * held;
        Ok(Self {
            t0,
            interval_minutes,
            intervals: days * per_day,
            train_end: train_days * per_day,
            validation_end: (train_days + held) * per_day,
        })
    }

    pub fn t_end(&self) -> i64 {
        self.t0 + self.intervals as i64 * i64::from(self.interval_minutes) * 60
    }

    pub fn time_of(&self, interval: usize) -> i64 {
        self.t0 + interval as i64 * i64::from(self.interval_minutes) * 60
    }

    pub fn intervals_per_day(&self) -> usize {
        (1440 / self.interval_minutes) as usize
    }
}

/// Elements with training-window demand and serviced areas.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// One per segmented element, in element order.
    pub elements: Vec<AtomicElement>,
    /// Demand of every element over the whole span.
    pub demand: DemandMatrix,
    pub split: TimeSplit,
    /// Records inside the span but in no element.
    pub unassigned: usize,
}

/// Bins records into elements and derives per-element series (training
/// window), areas and daily ACF.
pub fn prepare(
    cfg: &PipelineConfig,
    elements: &[Element],
    records: &[ServiceRecord],
) -> Result<Prepared, PipelineError> {
    let split = TimeSplit::of(records, cfg.interval_minutes)?;
    let polys: Vec<Polygon> = elements.iter().map(|e| e.polygon.clone()).collect();
    let binned = bin_records(records, &polys, cfg.interval_minutes, split.t0, split.t_end())?;
    let train_end_time = split.time_of(split.train_end);
    let train_records: Vec<ServiceRecord> =
        records.iter().filter(|r| r.timestamp < train_end_time).copied().collect();
    let cells = serviced_cells(&train_records, &polys);
    let train = binned.matrix.slice_time(0, split.train_end);
    let mut atomic = Vec::with_capacity(elements.len());
    for (i, e) in elements.iter().enumerate() {
        let ts_km2 = polygon_area_km2(&e.polygon);
        let (vs_cells, ts_cells) = cells[i];
        // The fraction is ≤ 1, so the rounded product never exceeds `ts_km2`.
        let vs_km2 = if ts_cells > 0 { ts_km2 * (vs_cells as f64 / ts_cells as f64) } else { 0.0 };
        let series = train.column(i).to_vec();
        let acf_daily = acf_or_none(&series, cfg.acf_lag)?;
        atomic.push(AtomicElement { id: e.id, polygon: e.polygon.clone(), ts_km2, vs_km2, series, acf_daily });
    }
    Ok(Prepared { elements: atomic, demand: binned.matrix, split, unassigned: binned.unassigned })
}

/// An output region: a connected cluster of elements, or one standalone
/// element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub region_id: usize,
    /// Element ids, ascending.
    pub members: Vec<usize>,
    /// Daily ACF of the summed training series; `None` when flat.
    pub acf_daily: Option<f64>,
    pub specificity: f64,
    pub area_km2: f64,
    pub mean_daily_demand: f64,
    pub standalone: bool,
}

/// One Pareto member with the element id of every clustered node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoRecord {
    #[serde(rename = "M")]
    pub m: usize,
    /// Cluster of each clustered node.
    pub assignment: Vec<usize>,
    /// Element id of each clustered node.
    pub elements: Vec<usize>,
    pub f1: f64,
    pub f2: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Everything the optimize stage produces.
#[derive(Debug, Clone)]
pub struct OptimizeReport {
    /// Element id per clustered node.
    pub nodes: Vec<usize>,
    /// Element ids kept as standalone regions.
    pub standalone: Vec<usize>,
    /// Demand share of elements that passed the demand filter.
    pub filter_recall: f64,
    /// Chosen `M*`, the values tried, and whether it fell back to singletons.
    pub clusters: usize,
    pub tried: Vec<usize>,
    pub fallback: bool,
    pub initial: Vec<ClusterSolution>,
    pub outcome: Option<OptimizeOutcome>,
    pub best_acf: Vec<Region>,
    pub best_specificity: Vec<Region>,
}

impl OptimizeReport {
    pub fn pareto(&self) -> Vec<ParetoRecord> {
        self.outcome
            .iter()
            .flat_map(|o| &o.pareto)
            .map(|s| ParetoRecord {
                m: s.m,
                assignment: s.assignment.clone(),
                elements: self.nodes.clone(),
                f1: s.f1,
                f2: s.f2,
                feasible: s.feasible,
                violations: s.violations.clone(),
            })
            .collect()
    }

    pub fn trace(&self) -> &[TraceRow] {
        self.outcome.as_ref().map_or(&[], |o| &o.trace)
    }

    pub fn evaluations(&self) -> usize {
        self.outcome.as_ref().map_or(0, |o| o.evaluations)
    }
}

/// Demand filter → standalone marking → aggregatable graph → cluster-scale
/// estimation with D-Balance → initial solutions (D-Balance, greedy, fluid)
/// → co-optimization.
pub fn optimize(
    cfg: &PipelineConfig,
    prepared: &Prepared,
    obstacles: &[Polygon],
) -> Result<OptimizeReport, PipelineError> {
    let per_day = prepared.split.intervals_per_day();
    let filtered = filter_elements(prepared.elements.clone(), cfg.alpha, per_day)?;
    let retained = filtered.retained;
    let standalone_pos = mark_standalone(&retained, cfg.max_area_km2, cfg.acf_threshold);
    let graph = build_edges(&retained, &standalone_pos, cfg.tau_m, obstacles);
    log::info!(
        "{} elements retained ({} standalone), {} edges",
        retained.len(),
        standalone_pos.len(),
        graph.edge_count()
    );
    let standalone: Vec<usize> = standalone_pos.iter().map(|&i| retained[i].id).collect();
    if standalone_pos.len() == retained.len() {
        let regions = build_regions(&retained, &[], None, &standalone_pos.iter().copied().collect::<Vec<_>>(), cfg.acf_lag, per_day);
        return Ok(OptimizeReport {
            nodes: Vec::new(),
            standalone,
            filter_recall: filtered.recall,
            clusters: 0,
            tried: Vec::new(),
            fallback: false,
            initial: Vec::new(),
            outcome: None,
            best_acf: regions.clone(),
            best_specificity: regions,
        });
    }
    let (problem, keep) = ClusterProblem::from_elements(&retained, &graph, cfg.max_area_km2, cfg.acf_lag)?;
    let scale = estimate_cluster_scale(&problem, |m| d_balance(&problem, m, cfg.imbalance, cfg.seed));
    let m = scale.clusters;
    log::info!("cluster scale M* = {m} (tried {:?}, fallback {})", scale.tried, scale.fallback);
    let mut initial = vec![scale.solution.clone()];
    if let Ok(g) = greedy_grow(&problem, m, cfg.lambda, cfg.seed) {
        initial.push(g.solution);
    }
    if let Ok(f) = fluid_grow(&problem, m, cfg.seed) {
        initial.push(f.solution);
    }
    let outcome = co_optimize(initial.clone(), &OptimizerConfig::new(cfg.w, cfg.eps, cfg.seed), &problem)?;
    log::info!("co-optimization: {} evaluations, {} Pareto solutions", outcome.evaluations, outcome.pareto.len());
    let standalone_list: Vec<usize> = standalone_pos.iter().copied().collect();
    let best_acf = build_regions(&retained, &keep, Some(outcome.best_acf()), &standalone_list, cfg.acf_lag, per_day);
    let best_specificity =
        build_regions(&retained, &keep, Some(outcome.best_specificity()), &standalone_list, cfg.acf_lag, per_day);
    Ok(OptimizeReport {
        nodes: keep.iter().map(|&i| retained[i].id).collect(),
        standalone,
        filter_recall: filtered.recall,
        clusters: m,
        tried: scale.tried,
        fallback: scale.fallback,
        initial,
        outcome: Some(outcome),
        best_acf,
        best_specificity,
    })
}

/// Regions `0..M` from the solution's clusters, then one region per
/// standalone element.
fn build_regions(
    retained: &[AtomicElement],
    keep: &[usize],
    solution: Option<&ClusterSolution>,
    standalone: &[usize],
    lag: usize,
    per_day: usize,
) -> Vec<Region> {
    let mut groups: Vec<(Vec<usize>, bool)> = Vec::new();
    if let Some(s) = solution {
        for cluster in s.clusters() {
            groups.push((cluster.iter().map(|&u| keep[u]).collect(), false));
        }
    }
    groups.extend(standalone.iter().map(|&i| (vec![i], true)));
    groups
        .into_iter()
        .enumerate()
        .map(|(region_id, (positions, standalone))| {
            let len = retained[positions[0]].series.len();
            let mut series = vec![0.0; len];
            let (mut ts, mut vs) = (0.0, 0.0);
            for &i in &positions {
                for (a, b) in series.iter_mut().zip(&retained[i].series) {
                    *a += b;
                }
                ts += retained[i].ts_km2;
                vs += retained[i].vs_km2;
            }
            let mut members: Vec<usize> = positions.iter().map(|&i| retained[i].id).collect();
            members.sort_unstable();
            let days = len as f64 / per_day as f64;
            Region {
                region_id,
                members,
                acf_daily: acf_or_none(&series, lag).ok().flatten(),
                specificity: if ts > 0.0 { vs / ts } else { 0.0 },
                area_km2: ts,
                mean_daily_demand: if days > 0.0 { series.iter().sum::<f64>() / days } else { 0.0 },
                standalone,
            }
        })
        .collect()
}

/// Regions as MultiPolygon features (one part per member element).
pub fn regions_to_geojson(regions: &[Region], elements: &[Element]) -> String {
    let by_id: std::collections::HashMap<usize, &Polygon> = elements.iter().map(|e| (e.id, &e.polygon)).collect();
    let features = regions
        .iter()
        .map(|r| {
            let parts = r.members.iter().filter_map(|id| by_id.get(id)).map(|p| polygon_coordinates(p)).collect();
            let mut props = JsonObject::new();
            props.insert("region_id".into(), r.region_id.into());
            props.insert("members".into(), r.members.clone().into());
            props.insert("acf_daily".into(), r.acf_daily.into());
            props.insert("specificity".into(), r.specificity.into());
            props.insert("area_km2".into(), r.area_km2.into());
            props.insert("mean_daily_demand".into(), r.mean_daily_demand.into());
            props.insert("standalone".into(), r.standalone.into());
            feature(Value::MultiPolygon(parts), props)
        })
        .collect();
    feature_collection(features)
}

/// Rendered optimize-stage files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimizeArtifacts {
    /// `regions.geojson`: the best-predictability solution.
    pub regions: String,
    /// `regions_specificity.geojson`: the best-specificity solution.
    pub regions_specificity: String,
    pub pareto: String,
    pub trace: String,
}

impl OptimizeArtifacts {
    pub fn render(report: &OptimizeReport, elements: &[Element]) -> Self {
        Self {
            regions: regions_to_geojson(&report.best_acf, elements),
            regions_specificity: regions_to_geojson(&report.best_specificity, elements),
            pareto: pareto_to_json(report),
            trace: trace_to_csv(report.trace()),
        }
    }

    /// Writes the four files into `dir` (created if missing).
    pub fn write(&self, dir: &std::path::Path) -> Result<(), PipelineError> {
        write_file(&dir.join("regions.geojson"), &self.regions)?;
        write_file(&dir.join("regions_specificity.geojson"), &self.regions_specificity)?;
        write_file(&dir.join("pareto.json"), &self.pareto)?;
        write_file(&dir.join("trace.csv"), &self.trace)
    }
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_file(path: &std::path::Path, text: &str) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io { path: path.into(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

/// Reads `path` as UTF-8 text.
pub fn read_file(path: &std::path::Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.into(), source })
}

/// `(region_id, member element ids)` from a regions document.
pub fn parse_region_members(text: &str) -> Result<Vec<(usize, Vec<usize>)>, PipelineError> {
    let fc = feature_collection_of(text, "regions")?;
    fc.features
        .iter()
        .map(|f| {
            let id = f.property("region_id").and_then(|v| v.as_u64());
            let members = f
                .property("members")
                .and_then(|v| v.as_array())
                .map(|a| a.iter().map(|x| x.as_u64().map(|x| x as usize)).collect::<Option<Vec<_>>>());
            match (id, members) {
                (Some(id), Some(Some(m))) => Ok((id as usize, m)),
                _ => Err(PipelineError::Format("region without region_id/members".into())),
            }
        })
        .collect()
}

/// `pareto.json`: pretty-printed array of solution records.
pub fn pareto_to_json(report: &OptimizeReport) -> String {
    let mut s = serde_json::to_string_pretty(&report.pareto()).expect("serializable");
    s.push('\n');
    s
}

/// `trace.csv` with one row per outer iteration.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if trace.is_empty() {
        w.write_record(["epoch", "iteration", "selected", "pareto_size", "best_acf", "best_specificity"])
            .expect("in-memory write");
    }
    for row in trace {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
