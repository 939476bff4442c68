//! Region generation: segment a city into road- and obstacle-bounded atomic
//! elements and cluster them into operation regions that are both predictable
//! (high daily autocorrelation) and specific (high serviced-area ratio).

// Validation deliberately writes `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod exact;
pub mod geometry;
pub mod metrics;
pub mod raster;
pub mod graph;
pub mod partition;
pub mod optimize;
pub mod ingest;
pub mod pipeline;
