//! C interface to the clustering core.
//!
//! Every function returns an [`RkStatus`]; results are written through out
//! pointers. Objects are opaque handles created by `rk_*_new`/solver calls
//! and released with the matching `rk_*_free`. On failure a message is kept
//! per thread and can be read with [`rk_last_error`]. Panics never cross the
//! boundary; they are reported as [`RkStatus::Internal`].

// Argument checks write `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use regionkit::geometry::{encode, Point};
use regionkit::graph::AggregatableGraph;
use regionkit::metrics::{acf, MetricsError};
use regionkit::optimize::{co_optimize, OptimizeError, OptimizerConfig};
use regionkit::partition::{
    d_balance, estimate_cluster_scale, fluid_grow, greedy_grow, ClusterProblem, ClusterSolution, PartitionError,
};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// An argument is out of range or inconsistent.
    InvalidArgument = 2,
    /// No feasible solution exists for the request.
    Infeasible = 3,
    /// The series is constant, so its autocorrelation is undefined.
    ZeroVariance = 4,
    /// Index past the end of a collection.
    OutOfRange = 5,
    /// Unexpected internal failure.
    Internal = 6,
}

/// A clustering problem: per-node demand series, total and serviced areas,
/// the merge graph, the area bound and the autocorrelation lag.
pub struct RkProblem {
    inner: ClusterProblem,
}

/// A clustering of every problem node with its objective values.
pub struct RkSolution {
    inner: ClusterSolution,
}

/// The non-dominated solutions returned by [`rk_co_optimize`].
pub struct RkParetoSet {
    members: Vec<RkSolution>,
    evaluations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(status: RkStatus, message: impl AsRef<str>) -> RkStatus {
    set_error(message.as_ref());
    status
}

/// Runs `f`, turning panics into [`RkStatus::Internal`] and clearing the
/// error message on success.
fn guard(f: impl FnOnce() -> RkStatus) -> RkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(RkStatus::Ok) => {
            set_error("");
            RkStatus::Ok
        }
        Ok(status) => status,
        Err(_) => fail(RkStatus::Internal, "internal panic"),
    }
}

fn metrics_status(e: &MetricsError) -> RkStatus {
    match e {
        MetricsError::ZeroVariance | MetricsError::ZeroVarianceCluster { .. } => RkStatus::ZeroVariance,
        _ => RkStatus::InvalidArgument,
    }
}

fn partition_status(e: &PartitionError) -> RkStatus {
    match e {
        PartitionError::InfeasibleM { .. } => RkStatus::Infeasible,
        PartitionError::Metrics(m) => metrics_status(m),
        _ => RkStatus::InvalidArgument,
    }
}

fn optimize_status(e: &OptimizeError) -> RkStatus {
    match e {
        OptimizeError::EmptyInitialSet => RkStatus::Infeasible,
        _ => RkStatus::InvalidArgument,
    }
}

/// Slice view of a C array; null is accepted only when `len == 0`.
unsafe fn slice<'a, T>(data: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(data, len))
    }
}

fn emit_solution(solution: ClusterSolution, out: *mut *mut RkSolution) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(RkSolution { inner: solution })) };
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Lag-`lag` autocorrelation of `series[0..len]`, normalized by the full
/// series variance with the `len / (len − lag)` correction.
///
/// # Safety
/// `series` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_acf(series: *const f64, len: usize, lag: usize, out: *mut f64) -> RkStatus {
    guard(|| {
        let Some(s) = slice(series, len) else { return fail(RkStatus::NullPointer, "series is null") };
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        match acf(s, lag) {
            Ok(v) => {
                *out = v;
                RkStatus::Ok
            }
            Err(e) => fail(metrics_status(&e), e.to_string()),
        }
    })
}

/// Eight-character geohash of (`lon`, `lat`) written to `out` as a
/// NUL-terminated string; `out` must hold at least 9 bytes.
///
/// # Safety
/// `out` must point to 9 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rk_geohash_encode(lon: f64, lat: f64, out: *mut c_char) -> RkStatus {
    guard(|| {
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        let p = match Point::checked(lon, lat) {
            Ok(p) => p,
            Err(e) => return fail(RkStatus::InvalidArgument, e.to_string()),
        };
        let code = encode(&p, 8);
        let bytes = code.code().as_bytes();
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), out, bytes.len());
        *out.add(bytes.len()) = 0;
        RkStatus::Ok
    })
}

/// Creates a problem over `nodes` nodes without edges. `series` holds
/// `nodes × intervals` demand values, node-major; `ts` and `vs` hold each
/// node's total and serviced area (km², `0 ≤ vs ≤ ts`).
///
/// # Safety
/// Arrays must be readable for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rk_problem_new(
    nodes: usize,
    intervals: usize,
    series: *const f64,
    ts: *const f64,
    vs: *const f64,
    max_area_km2: f64,
    lag: usize,
    out: *mut *mut RkProblem,
) -> RkStatus {
    guard(|| {
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        let Some(total) = nodes.checked_mul(intervals) else {
            return fail(RkStatus::InvalidArgument, "nodes × intervals overflows");
        };
        let (Some(series), Some(ts), Some(vs)) = (slice(series, total), slice(ts, nodes), slice(vs, nodes)) else {
            return fail(RkStatus::NullPointer, "series, ts or vs is null");
        };
        let columns = if intervals == 0 {
            vec![Vec::new(); nodes]
        } else {
            series.chunks(intervals).map(<[f64]>::to_vec).collect()
        };
        match ClusterProblem::new(AggregatableGraph::empty(nodes), columns, ts.to_vec(), vs.to_vec(), max_area_km2, lag)
        {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RkProblem { inner }));
                RkStatus::Ok
            }
            Err(e) => fail(partition_status(&e), e.to_string()),
        }
    })
}

/// Adds the undirected edge `u`–`v` (nodes that may share a cluster).
///
/// # Safety
/// `problem` must be a live handle from [`rk_problem_new`].
#[no_mangle]
pub unsafe extern "C" fn rk_problem_add_edge(problem: *mut RkProblem, u: usize, v: usize) -> RkStatus {
    guard(|| {
        let Some(p) = problem.as_mut() else { return fail(RkStatus::NullPointer, "problem is null") };
        let n = p.inner.node_count();
        if u >= n || v >= n {
            return fail(RkStatus::OutOfRange, format!("edge ({u}, {v}) outside 0..{n}"));
        }
        if u == v {
            return fail(RkStatus::InvalidArgument, "self edge");
        }
        p.inner.graph.add_edge(u, v);
        RkStatus::Ok
    })
}

/// Releases a problem; null is ignored.
///
/// # Safety
/// `problem` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rk_problem_free(problem: *mut RkProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Scores a caller-supplied assignment of every node to a cluster in
/// `0..m`.
///
/// # Safety
/// `problem` must be live; `assignment` readable for the problem's node
/// count; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_solution_evaluate(
    problem: *const RkProblem,
    assignment: *const usize,
    m: usize,
    out: *mut *mut RkSolution,
) -> RkStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return fail(RkStatus::NullPointer, "problem is null") };
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        let Some(a) = slice(assignment, p.inner.node_count()) else {
            return fail(RkStatus::NullPointer, "assignment is null");
        };
        if m == 0 {
            return fail(RkStatus::InvalidArgument, "m must be positive");
        }
        emit_solution(ClusterSolution::evaluate(&p.inner, a.to_vec(), m), out);
        RkStatus::Ok
    })
}

/// Data-balanced partition into `m` connected clusters.
///
/// # Safety
/// `problem` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_d_balance(
    problem: *const RkProblem,
    m: usize,
    imbalance: f64,
    seed: u64,
    out: *mut *mut RkSolution,
) -> RkStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return fail(RkStatus::NullPointer, "problem is null") };
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        if !(imbalance >= 0.0) {
            return fail(RkStatus::InvalidArgument, "imbalance must be nonnegative");
        }
        match d_balance(&p.inner, m, imbalance, seed) {
            Ok(s) => {
                emit_solution(s, out);
                RkStatus::Ok
            }
            Err(e) => fail(partition_status(&e), e.to_string()),
        }
    })
}

/// Greedy growth from `m` seeds with objective weight `lambda ∈ [0, 1]`.
///
/// # Safety
/// `problem` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_greedy_grow(
    problem: *const RkProblem,
    m: usize,
    lambda: f64,
    seed: u64,
    out: *mut *mut RkSolution,
) -> RkStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return fail(RkStatus::NullPointer, "problem is null") };
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        match greedy_grow(&p.inner, m, lambda, seed) {
            Ok(g) => {
                emit_solution(g.solution, out);
                RkStatus::Ok
            }
            Err(e) => fail(partition_status(&e), e.to_string()),
        }
    })
}

/// Fluid-community propagation from `m` seeds.
///
/// # Safety
/// `problem` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_fluid_grow(
    problem: *const RkProblem,
    m: usize,
    seed: u64,
    out: *mut *mut RkSolution,
) -> RkStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return fail(RkStatus::NullPointer, "problem is null") };
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        match fluid_grow(&p.inner, m, seed) {
            Ok(f) => {
                emit_solution(f.solution, out);
                RkStatus::Ok
            }
            Err(e) => fail(partition_status(&e), e.to_string()),
        }
    })
}

/// Smallest cluster count for which [`rk_d_balance`] is feasible, with that
/// solution (all singletons when none is).
///
/// # Safety
/// `problem` must be live; `clusters` and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_estimate_cluster_scale(
    problem: *const RkProblem,
    imbalance: f64,
    seed: u64,
    clusters: *mut usize,
    out: *mut *mut RkSolution,
) -> RkStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return fail(RkStatus::NullPointer, "problem is null") };
        if clusters.is_null() || out.is_null() {
            return fail(RkStatus::NullPointer, "clusters or out is null");
        }
        if !(imbalance >= 0.0) {
            return fail(RkStatus::InvalidArgument, "imbalance must be nonnegative");
        }
        let estimate = estimate_cluster_scale(&p.inner, |m| d_balance(&p.inner, m, imbalance, seed));
        *clusters = estimate.clusters;
        emit_solution(estimate.solution, out);
        RkStatus::Ok
    })
}

/// Number of nodes covered by the solution.
///
/// # Safety
/// `solution` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn rk_solution_len(solution: *const RkSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.assignment.len())
}

/// Number of clusters `m`.
///
/// # Safety
/// `solution` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn rk_solution_clusters(solution: *const RkSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.m)
}

/// Copies the cluster of each node (in `0..m`) into `out[0..len]`; `len`
/// must equal [`rk_solution_len`].
///
/// # Safety
/// `solution` must be live; `out` writable for `len` entries.
#[no_mangle]
pub unsafe extern "C" fn rk_solution_assignment(solution: *const RkSolution, out: *mut usize, len: usize) -> RkStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else { return fail(RkStatus::NullPointer, "solution is null") };
        if len != s.inner.assignment.len() {
            return fail(RkStatus::InvalidArgument, format!("len {len} != {}", s.inner.assignment.len()));
        }
        if out.is_null() && len > 0 {
            return fail(RkStatus::NullPointer, "out is null");
        }
        if len > 0 {
            ptr::copy_nonoverlapping(s.inner.assignment.as_ptr(), out, len);
        }
        RkStatus::Ok
    })
}

/// Writes the mean cluster autocorrelation (`f1`), mean specificity (`f2`)
/// and whether every constraint holds (1) or not (0). Any out pointer may be
/// null.
///
/// # Safety
/// `solution` must be live; non-null out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn rk_solution_objectives(
    solution: *const RkSolution,
    f1: *mut f64,
    f2: *mut f64,
    feasible: *mut i32,
) -> RkStatus {
    guard(|| {
        let Some(s) = solution.as_ref() else { return fail(RkStatus::NullPointer, "solution is null") };
        if let Some(f1) = f1.as_mut() {
            *f1 = s.inner.f1;
        }
        if let Some(f2) = f2.as_mut() {
            *f2 = s.inner.f2;
        }
        if let Some(feasible) = feasible.as_mut() {
            *feasible = i32::from(s.inner.feasible);
        }
        RkStatus::Ok
    })
}

/// Releases a solution; null is ignored.
///
/// # Safety
/// `solution` must be null or a live handle not owned by a Pareto set.
#[no_mangle]
pub unsafe extern "C" fn rk_solution_free(solution: *mut RkSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Pareto co-optimization from `count` initial solutions (infeasible ones
/// are ignored). `w` is the probability of refining the best-autocorrelation
/// solution, `eps` the move-evaluation budget.
///
/// # Safety
/// `problem` must be live; `initial` readable for `count` live solution
/// handles of this problem; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_co_optimize(
    problem: *const RkProblem,
    initial: *const *const RkSolution,
    count: usize,
    w: f64,
    eps: usize,
    seed: u64,
    out: *mut *mut RkParetoSet,
) -> RkStatus {
    guard(|| {
        let Some(p) = problem.as_ref() else { return fail(RkStatus::NullPointer, "problem is null") };
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        let Some(handles) = slice(initial, count) else { return fail(RkStatus::NullPointer, "initial is null") };
        let mut seeds = Vec::with_capacity(count);
        for &h in handles {
            let Some(s) = h.as_ref() else { return fail(RkStatus::NullPointer, "initial solution is null") };
            if s.inner.assignment.len() != p.inner.node_count() {
                return fail(RkStatus::InvalidArgument, "initial solution has the wrong node count");
            }
            seeds.push(s.inner.clone());
        }
        match co_optimize(seeds, &OptimizerConfig::new(w, eps, seed), &p.inner) {
            Ok(outcome) => {
                let members = outcome.pareto.into_iter().map(|inner| RkSolution { inner }).collect();
                *out = Box::into_raw(Box::new(RkParetoSet { members, evaluations: outcome.evaluations }));
                RkStatus::Ok
            }
            Err(e) => fail(optimize_status(&e), e.to_string()),
        }
    })
}

/// Number of solutions in the set, ordered by decreasing `f1`.
///
/// # Safety
/// `set` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn rk_pareto_len(set: *const RkParetoSet) -> usize {
    set.as_ref().map_or(0, |s| s.members.len())
}

/// Move evaluations spent by the run.
///
/// # Safety
/// `set` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn rk_pareto_evaluations(set: *const RkParetoSet) -> usize {
    set.as_ref().map_or(0, |s| s.evaluations)
}

/// Borrowed view of member `index`; valid until the set is freed. Do not
/// pass it to [`rk_solution_free`].
///
/// # Safety
/// `set` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rk_pareto_get(set: *const RkParetoSet, index: usize, out: *mut *const RkSolution) -> RkStatus {
    guard(|| {
        let Some(s) = set.as_ref() else { return fail(RkStatus::NullPointer, "set is null") };
        if out.is_null() {
            return fail(RkStatus::NullPointer, "out is null");
        }
        match s.members.get(index) {
            Some(m) => {
                *out = m;
                RkStatus::Ok
            }
            None => fail(RkStatus::OutOfRange, format!("index {index} ≥ {}", s.members.len())),
        }
    })
}

/// Releases a Pareto set and every member; null is ignored.
///
/// # Safety
/// `set` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rk_pareto_free(set: *mut RkParetoSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}
