#ifndef LIEGEO_H
#define LIEGEO_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result of an API call.
typedef enum LgStatus {
  LG_STATUS_OK = 0,
  // A required pointer argument was NULL.
  LG_STATUS_NULL_POINTER = 1,
  // The input violates a precondition (bad JSON, invalid grid, ...).
  LG_STATUS_INVALID_INPUT = 2,
  // The computation failed numerically (degenerate surface, ...).
  LG_STATUS_NUMERICAL_FAILURE = 3,
  // An internal panic was caught at the boundary.
  LG_STATUS_PANIC = 4,
} LgStatus;

// Normal frame, coframe and invariants of a surface.
typedef struct LgAnalysis LgAnalysis;

// Cauchy data for the series solver.
typedef struct LgCauchyData LgCauchyData;

// A series solution of the Cauchy problem.
typedef struct LgJetSolution LgJetSolution;

// A Legendre surface on a grid.
typedef struct LgSurface LgSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next API call on the same thread.
const char *lg_last_error_message(void);

// Module-qualified code of the last failed call (e.g.
// "surface_invariants.DegenerateSurface"), or NULL.
const char *lg_last_error_code(void);

// Library version as a static string.
const char *lg_version(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void lg_string_free(char *s);

// The Lie inner product of two vectors of R^(4,2).
//
// # Safety
// `v` and `w` must point to 6 doubles each.
enum LgStatus lg_inner(const double *v, const double *w, double *out);

// Point sphere of `p` (3 doubles) into `out` (6 doubles).
//
// # Safety
// Pointers must be valid for the stated lengths.
enum LgStatus lg_lift_point(const double *p, double *out);

// Tangent plane through `p` with unit normal `n` into `out` (6 doubles).
//
// # Safety
// Pointers must be valid for the stated lengths.
enum LgStatus lg_lift_plane(const double *p, const double *n, double *out);

// Surface from JSON: a Euclidean grid, a Legendre grid or an analytic
// description. Euclidean input is lifted.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum LgStatus lg_surface_from_json(const char *json, struct LgSurface **out);

// Surface from Euclidean samples in curvature-line coordinates. `window`
// is (u0, u1, v0, v1); `f` and `n` hold 3·nu·nv doubles (points and unit
// normals, u-major). Derivatives are taken by differences of order
// `fd_order` (2, 4 or 6).
//
// # Safety
// Pointers must be valid for the stated lengths.
enum LgStatus lg_surface_from_euclidean(size_t nu,
                                        size_t nv,
                                        const double *window,
                                        const double *f,
                                        const double *n,
                                        size_t fd_order,
                                        struct LgSurface **out);

// # Safety
// `s` must be NULL or a handle from this library, not yet freed.
void lg_surface_free(struct LgSurface *s);

// Grid size of a surface.
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_surface_grid(const struct LgSurface *s, size_t *nu, size_t *nv);

// The surface as Legendre grid JSON.
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_surface_to_json(const struct LgSurface *s, char **out);

// Reduction to the normal frame with differences of order `fd_order`.
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_surface_analyze(const struct LgSurface *s,
                                 size_t fd_order,
                                 struct LgAnalysis **out);

// # Safety
// `a` must be NULL or a handle from this library, not yet freed.
void lg_analysis_free(struct LgAnalysis *a);

// Invariants into `out`, 6·nu·nv doubles: node-major, each node holding
// (q1, q2, p1, p2, r1, r2).
//
// # Safety
// `out` must hold `len` doubles.
enum LgStatus lg_analysis_invariants(const struct LgAnalysis *a, double *out, size_t len);

// Coframe coefficients a, b (each nu·nv doubles).
//
// # Safety
// `a_out` and `b_out` must each hold `len` doubles.
enum LgStatus lg_analysis_coframe(const struct LgAnalysis *a,
                                  double *a_out,
                                  double *b_out,
                                  size_t len);

// Largest Euler-Lagrange residuals and whether both are within `tol`.
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_analysis_euler_lagrange(const struct LgAnalysis *a,
                                         double tol,
                                         size_t fd_order,
                                         double *r1_max,
                                         double *r2_max,
                                         bool *is_minimal);

// Cauchy data from JSON (coefficient lists k0..k3, h, w, mu, optional R0
// and order).
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_cauchy_data_from_json(const char *json, struct LgCauchyData **out);

// Random polynomial data with μ ≡ 1 and R(0) = I.
//
// # Safety
// `out` must be valid.
enum LgStatus lg_cauchy_data_random(uint64_t seed, size_t order, struct LgCauchyData **out);

// # Safety
// `d` must be NULL or a handle from this library, not yet freed.
void lg_cauchy_data_free(struct LgCauchyData *d);

// Solves for the series of the data's order.
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_cauchy_solve(const struct LgCauchyData *d, struct LgJetSolution **out);

// # Safety
// `s` must be NULL or a handle from this library, not yet freed.
void lg_jet_solution_free(struct LgJetSolution *s);

// Frame A(u, v) into `out` (36 doubles, row-major).
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_jet_solution_frame_at(const struct LgJetSolution *s,
                                       double u,
                                       double v,
                                       double *out);

// (a, b, q1, q2, p1, p2, r1, r2) at (u, v) into `out` (8 doubles).
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_jet_solution_scalars_at(const struct LgJetSolution *s,
                                         double u,
                                         double v,
                                         double *out);

// Largest residual of the verification report.
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_jet_solution_verify(const struct LgJetSolution *s, double *max_residual);

// The full verification report as JSON.
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_jet_solution_verify_json(const struct LgJetSolution *s, char **out);

// Evaluates the series on a grid over `window` = (u0, u1, v0, v1).
//
// # Safety
// Pointers must be valid.
enum LgStatus lg_jet_solution_surface(const struct LgJetSolution *s,
                                      const double *window,
                                      size_t nu,
                                      size_t nv,
                                      struct LgSurface **out);

// Involutivity report of the minimal-surface system as JSON.
//
// # Safety
// `out` must be valid.
enum LgStatus lg_eds_report_json(size_t samples, uint64_t seed, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIEGEO_H */
