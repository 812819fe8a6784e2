#ifndef MALAB_H
#define MALAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MalabStatus {
  MALAB_STATUS_OK = 0,
  MALAB_STATUS_NULL_POINTER = 1,
  MALAB_STATUS_INVALID_ARGUMENT = 2,
  // Parameters outside the domain of the operation.
  MALAB_STATUS_DOMAIN = 3,
  // The grid is too coarse for the request.
  MALAB_STATUS_RESOLUTION = 4,
  // An iteration did not converge.
  MALAB_STATUS_ITERATION = 5,
  MALAB_STATUS_IO = 6,
  MALAB_STATUS_PARSE = 7,
  // Quadrature, fitting or linear algebra failure.
  MALAB_STATUS_NUMERICAL = 8,
  // A panic was caught at the boundary.
  MALAB_STATUS_PANIC = 9,
} MalabStatus;

typedef enum MalabVerdictKind {
  MALAB_VERDICT_KIND_RADIAL = 0,
  MALAB_VERDICT_KIND_NON_RADIAL = 1,
  MALAB_VERDICT_KIND_INCONCLUSIVE = 2,
} MalabVerdictKind;

// Opaque scalar field on a disc grid.
typedef struct MalabField MalabField;

// Constants of the exponent `alpha`.
typedef struct MalabRegime {
  double alpha;
  double beta;
  double gamma;
  double c_alpha;
  double j0;
} MalabRegime;

typedef struct MalabSolveSummary {
  double residual_sup;
  size_t iterations;
  bool converged;
  double convexity_margin;
} MalabSolveSummary;

// Section-based classification. Fields that do not apply to the verdict
// are NaN.
typedef struct MalabVerdict {
  enum MalabVerdictKind kind;
  double c_fit;
  double big_c_fit;
  double a;
  // Slope of log(axis ratio) against log(1/t) over the fit window.
  double slope;
  double max_eccentricity;
  size_t sections;
} MalabVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *malab_version(void);

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *malab_last_error(void);

// # Safety
// `out` must be valid for writes.
enum MalabStatus malab_regime(double alpha, struct MalabRegime *out);

// Period integral `I_c` of the homogeneous-profile equation.
//
// # Safety
// `out` must be valid for writes.
enum MalabStatus malab_period_integral(double alpha, double c, double *out);

// Decay exponent of the `cos 2 theta` mode of the linearized operator
// (`alpha > 0`).
//
// # Safety
// `out` must be valid for writes.
enum MalabStatus malab_rho_exponent(double alpha, double *out);

// The radial solution `c_alpha |x|^beta` sampled on an `n x n` grid of the
// unit disc.
//
// # Safety
// `out` must be valid for writes.
enum MalabStatus malab_field_radial(double alpha, size_t n, struct MalabField **out);

// # Safety
// `path` must be a NUL-terminated string and `out` valid for writes.
enum MalabStatus malab_field_load(const char *path, struct MalabField **out);

// # Safety
// `field` must be a live handle and `path` a NUL-terminated string.
enum MalabStatus malab_field_save(const struct MalabField *field, const char *path);

// Releases a handle; NULL is ignored.
//
// # Safety
// `field` must be NULL or a handle not yet freed.
void malab_field_free(struct MalabField *field);

// Number of nodes; 0 for NULL.
//
// # Safety
// `field` must be NULL or a live handle.
size_t malab_field_len(const struct MalabField *field);

// Copies the node values (row-major, NaN outside the disc) into `buf`,
// which must hold `malab_field_len(field)` values.
//
// # Safety
// `field` must be a live handle and `buf` valid for `len` writes.
enum MalabStatus malab_field_copy_values(const struct MalabField *field, double *buf, size_t len);

// Interpolated value at `(x, y)`.
//
// # Safety
// `field` must be a live handle and `out` valid for writes.
enum MalabStatus malab_field_sample(const struct MalabField *field,
                                    double x,
                                    double y,
                                    double *out);

// The invariant `J = Delta u (r^2 u_rr)^gamma` at `(x, y)`.
//
// # Safety
// `field` must be a live handle and `out` valid for writes.
enum MalabStatus malab_j_value(const struct MalabField *field,
                               double alpha,
                               double x,
                               double y,
                               double *out);

// Solves `det D^2 u = c |x|^alpha` on an `n x n` grid of the unit disc.
//
// `boundary` holds `n_boundary` values at equally spaced angles
// `2 pi k / n_boundary`; NULL selects the radial data `c_alpha` (scaled by
// `sqrt(c)`). `tol <= 0` keeps the default tolerance. `summary` may be NULL.
//
// # Safety
// `boundary` must be NULL or valid for `n_boundary` reads, `out` valid for
// writes and `summary` NULL or valid for writes.
enum MalabStatus malab_solve(double alpha,
                             double c,
                             size_t n,
                             const double *boundary,
                             size_t n_boundary,
                             double tol,
                             struct MalabField **out,
                             struct MalabSolveSummary *summary);

// Classifies the behavior of `field` at its degenerate point from
// `n_t` log-spaced section heights between `t_hi` and `t_lo`.
//
// The field is anchored at its minimizer for `alpha > 0` and at the origin
// otherwise; centered sections are used for `alpha <= -1`.
//
// # Safety
// `field` must be a live handle and `out` valid for writes.
enum MalabStatus malab_classify(const struct MalabField *field,
                                double alpha,
                                double t_hi,
                                double t_lo,
                                size_t n_t,
                                struct MalabVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MALAB_H */
