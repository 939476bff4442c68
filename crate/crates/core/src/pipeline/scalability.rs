//! Runtime and convergence of the optimize stage as the number of (grid)
//! atomic elements grows.

use super::evaluate::grid_cells;
use super::synth::{synth_records, SynthSpec};
use super::{optimize, prepare, Element, PipelineError};
use crate::ingest::PipelineConfig;
use serde::Serialize;
use std::time::Instant;

/// One size of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalePoint {
    /// Requested element count.
    pub n: usize,
    /// Grid elements actually used (`side²`).
    pub elements: usize,
    /// Wall time of binning plus optimization.
    pub seconds: f64,
    /// Move evaluations until the optimizer stopped.
    pub epochs: usize,
    pub iterations: usize,
    pub clusters: usize,
}

/// Square grid of about `n` cells over the synthetic city as elements.
pub fn grid_elements(spec: &SynthSpec, n: usize) -> Vec<Element> {
    let side = ((n as f64).sqrt().round() as usize).max(1);
    grid_cells(&spec.bbox(), side, side).into_iter().enumerate().map(|(id, polygon)| Element { id, polygon }).collect()
}

/// Runs the optimize stage once per size on the same synthetic records.
pub fn run_scalability(
    cfg: &PipelineConfig,
    spec: &SynthSpec,
    sizes: &[usize],
) -> Result<Vec<ScalePoint>, PipelineError> {
    let records = synth_records(spec)?;
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let elements = grid_elements(spec, n);
        let start = Instant::now();
        let prepared = prepare(cfg, &elements, &records)?;
        let report = optimize(cfg, &prepared, &[])?;
        let seconds = start.elapsed().as_secs_f64();
        log::info!("N = {n}: {seconds:.2} s, {} evaluations", report.evaluations());
        out.push(ScalePoint {
            n,
            elements: elements.len(),
            seconds,
            epochs: report.evaluations(),
            iterations: report.trace().len(),
            clusters: report.clusters,
        });
    }
    Ok(out)
}

/// Sweep rows as CSV.
pub fn scale_points_to_csv(points: &[ScalePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        w.serialize(p).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
