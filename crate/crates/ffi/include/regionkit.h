#ifndef REGIONKIT_H
#define REGIONKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum RkStatus {
  RK_STATUS_OK = 0,
  // A required pointer was null.
  RK_STATUS_NULL_POINTER = 1,
  // An argument is out of range or inconsistent.
  RK_STATUS_INVALID_ARGUMENT = 2,
  // No feasible solution exists for the request.
  RK_STATUS_INFEASIBLE = 3,
  // The series is constant, so its autocorrelation is undefined.
  RK_STATUS_ZERO_VARIANCE = 4,
  // Index past the end of a collection.
  RK_STATUS_OUT_OF_RANGE = 5,
  // Unexpected internal failure.
  RK_STATUS_INTERNAL = 6,
} RkStatus;

// The non-dominated solutions returned by [`rk_co_optimize`].
typedef struct RkParetoSet RkParetoSet;

// A clustering problem: per-node demand series, total and serviced areas,
// the merge graph, the area bound and the autocorrelation lag.
typedef struct RkProblem RkProblem;

// A clustering of every problem node with its objective values.
typedef struct RkSolution RkSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or an empty string.
// The pointer stays valid until the next call on the same thread.
const char *rk_last_error(void);

// Lag-`lag` autocorrelation of `series[0..len]`, normalized by the full
// series variance with the `len / (len − lag)` correction.
//
// # Safety
// `series` must point to `len` readable doubles; `out` must be writable.
enum RkStatus rk_acf(const double *series, size_t len, size_t lag, double *out);

// Eight-character geohash of (`lon`, `lat`) written to `out` as a
// NUL-terminated string; `out` must hold at least 9 bytes.
//
// # Safety
// `out` must point to 9 writable bytes.
enum RkStatus rk_geohash_encode(double lon, double lat, char *out);

// Creates a problem over `nodes` nodes without edges. `series` holds
// `nodes × intervals` demand values, node-major; `ts` and `vs` hold each
// node's total and serviced area (km², `0 ≤ vs ≤ ts`).
//
// # Safety
// Arrays must be readable for the stated lengths; `out` must be writable.
enum RkStatus rk_problem_new(size_t nodes,
                             size_t intervals,
                             const double *series,
                             const double *ts,
                             const double *vs,
                             double max_area_km2,
                             size_t lag,
                             struct RkProblem **out);

// Adds the undirected edge `u`–`v` (nodes that may share a cluster).
//
// # Safety
// `problem` must be a live handle from [`rk_problem_new`].
enum RkStatus rk_problem_add_edge(struct RkProblem *problem, size_t u, size_t v);

// Releases a problem; null is ignored.
//
// # Safety
// `problem` must be null or a live handle, not used afterwards.
void rk_problem_free(struct RkProblem *problem);

// Scores a caller-supplied assignment of every node to a cluster in
// `0..m`.
//
// # Safety
// `problem` must be live; `assignment` readable for the problem's node
// count; `out` writable.
enum RkStatus rk_solution_evaluate(const struct RkProblem *problem,
                                   const size_t *assignment,
                                   size_t m,
                                   struct RkSolution **out);

// Data-balanced partition into `m` connected clusters.
//
// # Safety
// `problem` must be live; `out` writable.
enum RkStatus rk_d_balance(const struct RkProblem *problem,
                           size_t m,
                           double imbalance,
                           uint64_t seed,
                           struct RkSolution **out);

// Greedy growth from `m` seeds with objective weight `lambda ∈ [0, 1]`.
//
// # Safety
// `problem` must be live; `out` writable.
enum RkStatus rk_greedy_grow(const struct RkProblem *problem,
                             size_t m,
                             double lambda,
                             uint64_t seed,
                             struct RkSolution **out);

// Fluid-community propagation from `m` seeds.
//
// # Safety
// `problem` must be live; `out` writable.
enum RkStatus rk_fluid_grow(const struct RkProblem *problem,
                            size_t m,
                            uint64_t seed,
                            struct RkSolution **out);

// Smallest cluster count for which [`rk_d_balance`] is feasible, with that
// solution (all singletons when none is).
//
// # Safety
// `problem` must be live; `clusters` and `out` writable.
enum RkStatus rk_estimate_cluster_scale(const struct RkProblem *problem,
                                        double imbalance,
                                        uint64_t seed,
                                        size_t *clusters,
                                        struct RkSolution **out);

// Number of nodes covered by the solution.
//
// # Safety
// `solution` must be null or live.
size_t rk_solution_len(const struct RkSolution *solution);

// Number of clusters `m`.
//
// # Safety
// `solution` must be null or live.
size_t rk_solution_clusters(const struct RkSolution *solution);

// Copies the cluster of each node (in `0..m`) into `out[0..len]`; `len`
// must equal [`rk_solution_len`].
//
// # Safety
// `solution` must be live; `out` writable for `len` entries.
enum RkStatus rk_solution_assignment(const struct RkSolution *solution, size_t *out, size_t len);

// Writes the mean cluster autocorrelation (`f1`), mean specificity (`f2`)
// and whether every constraint holds (1) or not (0). Any out pointer may be
// null.
//
// # Safety
// `solution` must be live; non-null out pointers writable.
enum RkStatus rk_solution_objectives(const struct RkSolution *solution,
                                     double *f1,
                                     double *f2,
                                     int32_t *feasible);

// Releases a solution; null is ignored.
//
// # Safety
// `solution` must be null or a live handle not owned by a Pareto set.
void rk_solution_free(struct RkSolution *solution);

// Pareto co-optimization from `count` initial solutions (infeasible ones
// are ignored). `w` is the probability of refining the best-autocorrelation
// solution, `eps` the move-evaluation budget.
//
// # Safety
// `problem` must be live; `initial` readable for `count` live solution
// handles of this problem; `out` writable.
enum RkStatus rk_co_optimize(const struct RkProblem *problem,
                             const struct RkSolution *const *initial,
                             size_t count,
                             double w,
                             size_t eps,
                             uint64_t seed,
                             struct RkParetoSet **out);

// Number of solutions in the set, ordered by decreasing `f1`.
//
// # Safety
// `set` must be null or live.
size_t rk_pareto_len(const struct RkParetoSet *set);

// Move evaluations spent by the run.
//
// # Safety
// `set` must be null or live.
size_t rk_pareto_evaluations(const struct RkParetoSet *set);

// Borrowed view of member `index`; valid until the set is freed. Do not
// pass it to [`rk_solution_free`].
//
// # Safety
// `set` must be live; `out` writable.
enum RkStatus rk_pareto_get(const struct RkParetoSet *set,
                            size_t index,
                            const struct RkSolution **out);

// Releases a Pareto set and every member; null is ignored.
//
// # Safety
// `set` must be null or a live handle, not used afterwards.
void rk_pareto_free(struct RkParetoSet *set);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGIONKIT_H */
