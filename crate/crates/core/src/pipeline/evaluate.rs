//! Held-out evaluation of a regionalization and of an equal-count uniform
//! grid: daily ACF, specificity, and seasonal-naive MAPE@recall.

use super::{PipelineError, TimeSplit};
use crate::geometry::{polygon_area_km2, BBox, Polygon};
use crate::ingest::{bin_records, serviced_cells, ServiceRecord};
use crate::metrics::{acf_or_none, aggregate, mape_at_recall, seasonal_naive_predict, ClusterSeries, MetricsError};
use serde::Serialize;

/// Metrics of one region over the evaluation window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMetrics {
    pub region_id: usize,
    pub acf_daily: Option<f64>,
    pub specificity: f64,
    pub area_km2: f64,
    pub mean_daily_demand: f64,
    /// Counted in MAPE@recall.
    pub retained: bool,
}

/// Summary row for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub regions: usize,
    /// Mean daily ACF over regions whose series is not flat.
    pub mean_acf_daily: f64,
    pub mean_specificity: f64,
    pub mape: f64,
    pub recall: f64,
    /// E.g. `MAPE@97%`, the achieved recall rounded down.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub rows: Vec<RegionMetrics>,
    pub summary: MethodSummary,
}

/// Evaluates regions given as polygon lists. ACF, specificity and mean
/// demand use the held-out window (validation and test days); MAPE
/// forecasts each test interval with the value one day earlier. Regions are
/// retained for MAPE in decreasing order of test-window daily demand until
/// their share of the regions' total test-window demand reaches
/// `recall_target`.
pub fn evaluate_regions(
    method: &str,
    regions: &[Vec<Polygon>],
    records: &[ServiceRecord],
    split: &TimeSplit,
    recall_target: f64,
) -> Result<Evaluation, PipelineError> {
    let per_day = split.intervals_per_day();
    let mut polys = Vec::new();
    let mut owner = Vec::new();
    for (r, parts) in regions.iter().enumerate() {
        for p in parts {
            polys.push(p.clone());
            owner.push(r);
        }
    }
    let binned = bin_records(records, &polys, split.interval_minutes, split.t0, split.t_end())?;
    let series = aggregate(&binned.matrix, &owner, regions.len())?;
    let held = slice(&series, split.train_end, split.intervals);
    let eval_start = split.time_of(split.train_end);
    let held_records: Vec<ServiceRecord> =
        records.iter().filter(|r| r.timestamp >= eval_start && r.timestamp < split.t_end()).copied().collect();
    let cells = serviced_cells(&held_records, &polys);
    let mut vs = vec![0usize; regions.len()];
    let mut ts = vec![0usize; regions.len()];
    for (k, &(v, t)) in cells.iter().enumerate() {
        vs[owner[k]] += v;
        ts[owner[k]] += t;
    }

    let horizon = split.intervals - split.validation_end;
    let (actual, predicted) = seasonal_naive_predict(&held, per_day, horizon)?;
    let test_total: f64 = actual.columns.iter().flatten().sum();
    let days = horizon as f64 / per_day as f64;
    let test_daily: Vec<f64> = actual.columns.iter().map(|c| c.iter().sum::<f64>() / days).collect();
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by(|&a, &b| test_daily[b].total_cmp(&test_daily[a]).then(a.cmp(&b)));
    let mut threshold = 0.0;
    let mut kept = 0.0;
    for &j in &order {
        threshold = test_daily[j];
        kept += test_daily[j] * days;
        if kept >= recall_target * test_total {
            break;
        }
    }
    let report = mape_at_recall(&actual, &predicted, threshold, per_day)?;
    let recall = report.recall;

    let held_days = held.intervals() as f64 / per_day as f64;
    let rows: Vec<RegionMetrics> = (0..regions.len())
        .map(|j| {
            Ok(RegionMetrics {
                region_id: j,
                acf_daily: acf_or_none(&held.columns[j], per_day)?,
                specificity: if ts[j] > 0 { vs[j] as f64 / ts[j] as f64 } else { 0.0 },
                area_km2: regions[j].iter().map(polygon_area_km2).sum(),
                mean_daily_demand: held.columns[j].iter().sum::<f64>() / held_days,
                retained: report.retained.contains(&j),
            })
        })
        .collect::<Result<_, MetricsError>>()?;
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.acf_daily).collect();
    let mean_acf = if defined.is_empty() { 0.0 } else { defined.iter().sum::<f64>() / defined.len() as f64 };
    let mean_spec = rows.iter().map(|r| r.specificity).sum::<f64>() / rows.len().max(1) as f64;
    let summary = MethodSummary {
        method: method.to_owned(),
        regions: regions.len(),
        mean_acf_daily: mean_acf,
        mean_specificity: mean_spec,
        mape: report.mape,
        recall,
        label: format!("MAPE@{}%", (recall * 100.0).floor() as u32),
    };
    Ok(Evaluation { rows, summary })
}

fn slice(s: &ClusterSeries, start: usize, end: usize) -> ClusterSeries {
    ClusterSeries { columns: s.columns.iter().map(|c| c[start..end].to_vec()).collect() }
}

/// Grid shape `(columns, rows)` whose cell count is closest to `count`,
/// preferring square cells on ties.
pub fn grid_shape(count: usize, bbox: &BBox) -> (usize, usize) {
    let count = count.max(1);
    let (w, h) = (bbox.width_km().max(1e-12), bbox.height_km().max(1e-12));
    let mut best = (1, count);
    let mut best_key = (usize::MAX, f64::INFINITY);
    for nx in 1..=count {
        let ny = ((count as f64 / nx as f64).round() as usize).max(1);
        let diff = (nx * ny).abs_diff(count);
        let skew = ((w / nx as f64) / (h / ny as f64)).ln().abs();
        if diff < best_key.0 || (diff == best_key.0 && skew < best_key.1) {
            best = (nx, ny);
            best_key = (diff, skew);
        }
    }
    best
}

/// Uniform grid of about `count` rectangles over `bbox`, row-major from
/// the south-west corner.
pub fn grid_regions(bbox: &BBox, count: usize) -> Vec<Vec<Polygon>> {
    let (nx, ny) = grid_shape(count, bbox);
    grid_cells(bbox, nx, ny).into_iter().map(|p| vec![p]).collect()
}

/// `nx × ny` rectangles covering `bbox`, row-major from the south-west.
pub fn grid_cells(bbox: &BBox, nx: usize, ny: usize) -> Vec<Polygon> {
    let dx = (bbox.max_lon - bbox.min_lon) / nx as f64;
    let dy = (bbox.max_lat - bbox.min_lat) / ny as f64;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x0 = bbox.min_lon + i as f64 * dx;
            let y0 = bbox.min_lat + j as f64 * dy;
            let x1 = if i + 1 == nx { bbox.max_lon } else { x0 + dx };
            let y1 = if j + 1 == ny { bbox.max_lat } else { y0 + dy };
            out.push(Polygon::rectangle(x0, y0, x1, y1));
        }
    }
    out
}

/// Per-region metrics as CSV.
pub fn rows_to_csv(rows: &[RegionMetrics]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Side-by-side summary rows as CSV.
pub fn summaries_to_csv(rows: &[MethodSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn grid_shape_prefers_exact_and_square() {
        let b = BBox::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(grid_shape(16, &b), (4, 4));
        let (nx, ny) = grid_shape(12, &b);
        assert_eq!(nx * ny, 12);
        assert!(nx == 3 || nx == 4);
        assert_eq!(grid_regions(&b, 7).len(), grid_shape(7, &b).0 * grid_shape(7, &b).1);
    }

    #[test]
    fn identical_partitions_give_identical_rows() {
        let b = BBox::new(0.0, 0.0, 0.02, 0.02);
        let regions = grid_regions(&b, 4);
        let split = TimeSplit { t0: 0, interval_minutes: 60, intervals: 240, train_end: 192, validation_end: 216 };
        let records: Vec<ServiceRecord> = (0..240 * 6)
            .map(|k| {
                let h = (k / 6) as i64;
                let x = 0.001 + 0.003 * (k % 6) as f64;
                ServiceRecord { timestamp: h * 3600 + (k % 6) as i64, location: Point::new(x, x) }
            })
            .collect();
        let a = evaluate_regions("a", &regions, &records, &split, 0.95).unwrap();
        let g = evaluate_regions("a", &regions, &records, &split, 0.95).unwrap();
        assert_eq!(a, g);
        assert!(a.summary.recall >= 0.95);
        assert_eq!(a.summary.mape, 0.0);
    }
}
