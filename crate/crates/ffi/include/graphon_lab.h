#ifndef GRAPHON_LAB_H
#define GRAPHON_LAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum GlStatus {
  GL_STATUS_OK = 0,
  GL_STATUS_NULL_POINTER = 1,
  GL_STATUS_DOMAIN = 2,
  GL_STATUS_CONVERGENCE = 3,
  GL_STATUS_FORMAT = 4,
  GL_STATUS_IO = 5,
  GL_STATUS_PANIC = 6,
} GlStatus;

typedef enum GlRegime {
  GL_REGIME_BELOW = 0,
  GL_REGIME_ABOVE = 1,
  GL_REGIME_BOUNDARY = 2,
} GlRegime;

/**
 * Sampled finite graph.
 */
typedef struct GlGraph GlGraph;

/**
 * Discretized graphon.
 */
typedef struct GlGrid GlGrid;

/**
 * Solved bipodal graphon.
 */
typedef struct GlReport GlReport;

typedef struct GlParams {
  double a;
  double b;
  double c;
  double d;
  double mu;
  double entropy;
  double grad_norm;
  double residual_eps;
  double residual_tau;
  uint64_t iterations;
  bool converged;
} GlParams;

typedef struct GlSeries {
  double a;
  double b;
  double c;
  double d;
  double mu;
  double entropy;
} GlSeries;

/**
 * Copies the last error message of this thread into `buf` (nul-terminated,
 * truncated to `len`) and returns the full message length, or 0 if none.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t gl_last_error(char *buf, size_t len);

/**
 * Maximizes entropy at edge density `e` and `k`-cycle density `t`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GlStatus gl_solve(double e, double t, uint32_t k, struct GlReport **out);

/**
 * Solves below the curve at `t = e^k - delta^k`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GlStatus gl_solve_below(double e, double delta, uint32_t k, struct GlReport **out);

/**
 * Solves above the curve at `t = e^k + dtau`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GlStatus gl_solve_above(double e, double dtau, uint32_t k, struct GlReport **out);

/**
 * # Safety
 * `report` must come from a `gl_solve*` call; `out` must be valid for writes.
 */
enum GlStatus gl_report_params(const struct GlReport *report, struct GlParams *out);

/**
 * # Safety
 * `report` must come from a `gl_solve*` call; `out` must be valid for writes.
 */
enum GlStatus gl_report_regime(const struct GlReport *report, enum GlRegime *out);

/**
 * # Safety
 * `report` must be null or come from a `gl_solve*` call, and not be used again.
 */
void gl_report_free(struct GlReport *report);

/**
 * Truncated series below the curve.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GlStatus gl_series_below(double e, double delta, uint32_t k, struct GlSeries *out);

/**
 * Truncated series above the curve.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GlStatus gl_series_above(double e, double dtau, uint32_t k, struct GlSeries *out);

/**
 * Discretizes a solved graphon on an `n x n` grid.
 *
 * # Safety
 * `report` must come from a `gl_solve*` call; `out` must be valid for writes.
 */
enum GlStatus gl_grid_from_report(const struct GlReport *report, size_t n, struct GlGrid **out);

/**
 * Row-major `n x n` values, copied from `values`.
 *
 * # Safety
 * `values` must hold `n * n` doubles; `out` must be valid for writes.
 */
enum GlStatus gl_grid_new(size_t n, const double *values, struct GlGrid **out);

/**
 * # Safety
 * `grid` must come from this library; `eps` and `tau` must be valid for writes.
 */
enum GlStatus gl_grid_densities(const struct GlGrid *grid, uint32_t k, double *eps, double *tau);

/**
 * # Safety
 * `grid` must come from this library; `out` must be valid for writes.
 */
enum GlStatus gl_grid_entropy(const struct GlGrid *grid, double *out);

/**
 * Maximizes grid entropy at `(e, t)` from `init` with default options.
 *
 * # Safety
 * `init` must come from this library; `out` must be valid for writes.
 */
enum GlStatus gl_oracle(const struct GlGrid *init,
                        double e,
                        double t,
                        uint32_t k,
                        struct GlGrid **out);

/**
 * # Safety
 * `grid` must be null or come from this library, and not be used again.
 */
void gl_grid_free(struct GlGrid *grid);

/**
 * Draws a W-random graph on `n` vertices from a solved graphon.
 *
 * # Safety
 * `report` must come from a `gl_solve*` call; `out` must be valid for writes.
 */
enum GlStatus gl_sample(const struct GlReport *report,
                        size_t n,
                        uint64_t seed,
                        struct GlGraph **out);

/**
 * Homomorphism density of an edge (`k = 2`) or odd cycle (`k <= 9`).
 *
 * # Safety
 * `graph` must come from `gl_sample`; `out` must be valid for writes.
 */
enum GlStatus gl_graph_density(const struct GlGraph *graph, uint32_t k, double *out);

/**
 * # Safety
 * `graph` must come from `gl_sample`; `out` must be valid for writes.
 */
enum GlStatus gl_graph_edge_count(const struct GlGraph *graph, uint64_t *out);

/**
 * # Safety
 * `graph` must be null or come from `gl_sample`, and not be used again.
 */
void gl_graph_free(struct GlGraph *graph);

#endif  /* GRAPHON_LAB_H */
