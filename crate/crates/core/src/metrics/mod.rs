//! Demand matrices, the daily-autocorrelation predictability measure,
//! specificity, aggregation into cluster series and forecast-error metrics.

mod acf;

pub use acf::{acf, acf_daily, acf_or_none, daily_lag};

use crate::geometry::{CellIndex, Point, Polygon, GEOHASH_PRECISION};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("cluster {cluster} has zero variance")]
    ZeroVarianceCluster { cluster: usize },
    #[error("lag {lag} is not smaller than series length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("lag must be at least 1")]
    ZeroLag,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("interval of {0} minutes does not divide a day")]
    IntervalNotDivisor(u32),
    #[error("element {element} is not assigned to a cluster in [0, {clusters})")]
    UnassignedElement { element: usize, clusters: usize },
    #[error("assignment covers {got} elements, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cluster {cluster} has zero total area")]
    ZeroArea { cluster: usize },
    #[error("no cluster reaches the minimum daily demand")]
    NothingRetained,
    #[error("history of {len} intervals is too short for lag {lag} and horizon {horizon}")]
    HistoryTooShort { len: usize, lag: usize, horizon: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// `T × N` per-interval counts, stored column by column (one series per
/// element).
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    columns: Vec<Vec<f64>>,
    len: usize,
    /// Interval length in minutes.
    pub interval_minutes: u32,
    /// Start of the first interval, seconds since the Unix epoch.
    pub t0: i64,
}

impl DemandMatrix {
    /// Builds a matrix from per-element series of equal length.
    pub fn from_columns(columns: Vec<Vec<f64>>, interval_minutes: u32, t0: i64) -> Result<Self, MetricsError> {
        let len = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != len) {
            return Err(MetricsError::ShapeMismatch(format!("column of length {} vs {len}", c.len())));
        }
        if columns.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(MetricsError::ShapeMismatch("values must be finite and nonnegative".into()));
        }
        Ok(Self { columns, len, interval_minutes, t0 })
    }

    pub fn zeros(t: usize, n: usize, interval_minutes: u32, t0: i64) -> Self {
        Self { columns: vec![vec![0.0; t]; n], len: t, interval_minutes, t0 }
    }

    /// Number of intervals `T`.
    pub fn intervals(&self) -> usize {
        self.len
    }

    /// Number of elements `N`.
    pub fn elements(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.columns[i][t]
    }

    /// Intervals per day for this matrix's interval length.
    pub fn intervals_per_day(&self) -> Result<usize, MetricsError> {
        daily_lag(self.interval_minutes)
    }

    /// Restricts to intervals `[start, end)`.
    pub fn slice_time(&self, start: usize, end: usize) -> Self {
        let end = end.min(self.len);
        let start = start.min(end);
        Self {
            columns: self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
            len: end - start,
            interval_minutes: self.interval_minutes,
            t0: self.t0 + start as i64 * i64::from(self.interval_minutes) * 60,
        }
    }

    /// Keeps only the listed element columns, in order.
    pub fn select_elements(&self, ids: &[usize]) -> Self {
        Self {
            columns: ids.iter().map(|&i| self.columns[i].clone()).collect(),
            len: self.len,
            interval_minutes: self.interval_minutes,
            t0: self.t0,
        }
    }

    /// Mean demand per day of element `i`.
    pub fn mean_daily_demand(&self, i: usize) -> Result<f64, MetricsError> {
        mean_daily(&self.columns[i], self.intervals_per_day()?)
    }
}

fn mean_daily(series: &[f64], per_day: usize) -> Result<f64, MetricsError> {
    if series.is_empty() {
        return Ok(0.0);
    }
    let days = series.len() as f64 / per_day as f64;
    Ok(series.iter().sum::<f64>() / days)
}

/// Aggregated `T × M` series, one column per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSeries {
    pub columns: Vec<Vec<f64>>,
}

impl ClusterSeries {
    pub fn clusters(&self) -> usize {
        self.columns.len()
    }

    pub fn intervals(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// `S = D × X` for a total assignment of elements to clusters `0..m`.
pub fn aggregate(d: &DemandMatrix, assignment: &[usize], m: usize) -> Result<ClusterSeries, MetricsError> {
    if assignment.len() != d.elements() {
        return Err(MetricsError::LengthMismatch { expected: d.elements(), got: assignment.len() });
    }
    let mut columns = vec![vec![0.0; d.intervals()]; m];
    for (i, &c) in assignment.iter().enumerate() {
        if c >= m {
            return Err(MetricsError::UnassignedElement { element: i, clusters: m });
        }
        for (acc, v) in columns[c].iter_mut().zip(d.column(i)) {
            *acc += v;
        }
    }
    Ok(ClusterSeries { columns })
}

/// Mean daily autocorrelation over clusters; fails on the first cluster with
/// zero variance.
pub fn mean_acf_objective(s: &ClusterSeries, lag: usize) -> Result<f64, MetricsError> {
    let mut total = 0.0;
    for (j, col) in s.columns.iter().enumerate() {
        total += acf(col, lag).map_err(|e| match e {
            MetricsError::ZeroVariance => MetricsError::ZeroVarianceCluster { cluster: j },
            other => other,
        })?;
    }
    Ok(total / s.clusters() as f64)
}

/// Autocorrelation as scored inside the optimizer: a zero-variance series
/// counts as 0 so that flat (typically empty) clusters are not rewarded.
pub fn objective_acf(series: &[f64], lag: usize) -> f64 {
    acf(series, lag).unwrap_or(0.0)
}

/// Total and serviced area per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceArea {
    pub ts: Vec<f64>,
    pub vs: Vec<f64>,
}

/// Mean over clusters of `Σ vs / Σ ts`.
pub fn specificity_objective(sa: &ServiceArea, assignment: &[usize], m: usize) -> Result<f64, MetricsError> {
    if assignment.len() != sa.ts.len() || sa.vs.len() != sa.ts.len() {
        return Err(MetricsError::LengthMismatch { expected: sa.ts.len(), got: assignment.len() });
    }
    let mut vs = vec![0.0; m];
    let mut ts = vec![0.0; m];
    for (i, &c) in assignment.iter().enumerate() {
        if c >= m {
            return Err(MetricsError::UnassignedElement { element: i, clusters: m });
        }
        vs[c] += sa.vs[i];
        ts[c] += sa.ts[i];
    }
    let mut total = 0.0;
    for j in 0..m {
        if ts[j] <= 0.0 {
            return Err(MetricsError::ZeroArea { cluster: j });
        }
        total += vs[j] / ts[j];
    }
    Ok(total / m as f64)
}

/// Geohash cells (at the standard precision) whose centers fall inside the
/// element, and how many of those contain at least one record. Returns
/// `(vs, ts)` as cell counts.
pub fn serviced_area_from_geohash(records: &[Point], element: &Polygon) -> (usize, usize) {
    let cells = cells_in_polygon(element);
    let visited: HashSet<CellIndex> = records.iter().map(|p| CellIndex::of(p, GEOHASH_PRECISION)).collect();
    let vs = cells.iter().filter(|c| visited.contains(c)).count();
    (vs, cells.len())
}

/// Geohash cells whose center lies inside `poly`.
pub fn cells_in_polygon(poly: &Polygon) -> Vec<CellIndex> {
    let bb = poly.bbox();
    let lo = CellIndex::of(&Point::new(bb.min_lon, bb.min_lat), GEOHASH_PRECISION);
    let hi = CellIndex::of(&Point::new(bb.max_lon, bb.max_lat), GEOHASH_PRECISION);
    let mut out = Vec::new();
    for lat in lo.lat..=hi.lat {
        for lon in lo.lon..=hi.lon {
            let c = CellIndex { lon, lat };
            if poly.contains(&c.center(GEOHASH_PRECISION)) {
                out.push(c);
            }
        }
    }
    out
}

/// Forecast error over clusters whose mean daily demand reaches a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MapeReport {
    pub mape: f64,
    /// Retained demand as a share of total demand.
    pub recall: f64,
    /// Indices of retained clusters.
    pub retained: Vec<usize>,
}

/// MAPE over retained `(t, j)` pairs with nonzero actual demand. Clusters
/// whose mean daily demand (measured on `actual`) is below `min_daily_demand`
/// are dropped.
pub fn mape_at_recall(
    actual: &ClusterSeries,
    predicted: &ClusterSeries,
    min_daily_demand: f64,
    intervals_per_day: usize,
) -> Result<MapeReport, MetricsError> {
    if actual.clusters() != predicted.clusters() || actual.intervals() != predicted.intervals() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            actual.intervals(),
            actual.clusters(),
            predicted.intervals(),
            predicted.clusters()
        )));
    }
    let total: f64 = actual.columns.iter().flatten().sum();
    let mut retained = Vec::new();
    let mut kept = 0.0;
    let (mut err, mut count) = (0.0, 0usize);
    for (j, (a, p)) in actual.columns.iter().zip(&predicted.columns).enumerate() {
        if mean_daily(a, intervals_per_day)? < min_daily_demand {
            continue;
        }
        retained.push(j);
        kept += a.iter().sum::<f64>();
        for (x, y) in a.iter().zip(p) {
            if *x > 0.0 {
                err += ((x - y) / x).abs();
                count += 1;
            }
        }
    }
    if retained.is_empty() || count == 0 {
        return Err(MetricsError::NothingRetained);
    }
    Ok(MapeReport { mape: err / count as f64, recall: if total > 0.0 { kept / total } else { 0.0 }, retained })
}

/// Seasonal-naive forecast of the last `horizon` intervals: the prediction at
/// `t` is the observation at `t - lag`. Returns `(actual, predicted)` over the
/// horizon.
pub fn seasonal_naive_predict(
    s: &ClusterSeries,
    lag: usize,
    horizon: usize,
) -> Result<(ClusterSeries, ClusterSeries), MetricsError> {
    let len = s.intervals();
    if horizon == 0 || lag == 0 || len < horizon + lag {
        return Err(MetricsError::HistoryTooShort { len, lag, horizon });
    }
    let start = len - horizon;
    let actual = s.columns.iter().map(|c| c[start..].to_vec()).collect();
    let predicted = s.columns.iter().map(|c| c[start - lag..len - lag].to_vec()).collect();
    Ok((ClusterSeries { columns: actual }, ClusterSeries { columns: predicted }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> DemandMatrix {
        DemandMatrix::from_columns(vec![vec![1.0, 2.0, 0.0], vec![0.0, 5.0, 1.0], vec![4.0, 4.0, 4.0]], 60, 0).unwrap()
    }

    #[test]
    fn aggregation_identity_total_and_conservation() {
        let d = matrix();
        let s = aggregate(&d, &[0, 1, 2], 3).unwrap();
        assert_eq!(s.columns, d.columns().to_vec());
        let one = aggregate(&d, &[0, 0, 0], 1).unwrap();
        assert_eq!(one.columns[0], vec![5.0, 11.0, 5.0]);
        let two = aggregate(&d, &[1, 0, 1], 2).unwrap();
        for t in 0..3 {
            assert_eq!(two.columns[0][t] + two.columns[1][t], one.columns[0][t]);
        }
        assert!(matches!(aggregate(&d, &[0, 3, 0], 3), Err(MetricsError::UnassignedElement { element: 1, .. })));
    }

    #[test]
    fn mean_acf_reports_zero_variance_cluster() {
        let d = matrix();
        let s = aggregate(&d, &[0, 0, 1], 2).unwrap();
        assert_eq!(mean_acf_objective(&s, 1), Err(MetricsError::ZeroVarianceCluster { cluster: 1 }));
        assert_eq!(objective_acf(&s.columns[1], 1), 0.0);
    }

    #[test]
    fn specificity_cases() {
        let sa = ServiceArea { ts: vec![10.0, 10.0], vs: vec![4.0, 0.0] };
        assert!((specificity_objective(&sa, &[0, 0], 1).unwrap() - 0.2).abs() < 1e-15);
        let full = ServiceArea { ts: vec![1.0, 2.0], vs: vec![1.0, 2.0] };
        assert_eq!(specificity_objective(&full, &[0, 1], 2).unwrap(), 1.0);
        let zero = ServiceArea { ts: vec![0.0, 2.0], vs: vec![0.0, 2.0] };
        assert_eq!(specificity_objective(&zero, &[0, 1], 2), Err(MetricsError::ZeroArea { cluster: 0 }));
    }

    #[test]
    fn mape_cases() {
        let a = ClusterSeries { columns: vec![vec![10.0, 20.0, 0.0, 5.0], vec![0.0, 0.0, 1.0, 0.0]] };
        let perfect = mape_at_recall(&a, &a, 1.0, 2).unwrap();
        assert_eq!(perfect.mape, 0.0);
        assert_eq!(perfect.retained, vec![0]);
        assert!((perfect.recall - 35.0 / 36.0).abs() < 1e-15);
        let p = ClusterSeries { columns: a.columns.iter().map(|c| c.iter().map(|v| v * 1.1).collect()).collect() };
        assert!((mape_at_recall(&a, &p, 0.0, 2).unwrap().mape - 0.1).abs() < 1e-12);
        assert_eq!(mape_at_recall(&a, &a, 1e9, 2), Err(MetricsError::NothingRetained));
    }

    #[test]
    fn seasonal_naive_on_periodic_and_constant() {
        let s = ClusterSeries { columns: vec![(0..96).map(|h| (h % 24) as f64 + 1.0).collect(), vec![3.0; 96]] };
        let (a, p) = seasonal_naive_predict(&s, 24, 24).unwrap();
        assert_eq!(a, p);
        assert!(seasonal_naive_predict(&s, 24, 80).is_err());
    }

    #[test]
    fn serviced_cells() {
        let poly = Polygon::rectangle(10.0, 10.0, 10.003, 10.003);
        let (vs0, ts) = serviced_area_from_geohash(&[], &poly);
        assert_eq!(vs0, 0);
        assert!(ts > 0);
        let all: Vec<Point> = cells_in_polygon(&poly).iter().map(|c| c.center(GEOHASH_PRECISION)).collect();
        assert_eq!(serviced_area_from_geohash(&all, &poly), (ts, ts));
    }
}
