#ifndef CEE_H
#define CEE_H

#include <stdbool.h>
#include <stddef.h>

/**
 * Result codes. The first five agree with the exit codes of the `cee` binary.
 */
typedef enum CeeStatus {
  CEE_STATUS_OK = 0,
  CEE_STATUS_MALFORMED = 1,
  CEE_STATUS_INFEASIBLE = 2,
  CEE_STATUS_SOLVER_FAILURE = 3,
  CEE_STATUS_CERTIFICATION_FAILED = 4,
  CEE_STATUS_NULL_POINTER = 5,
  CEE_STATUS_INVALID_UTF8 = 6,
  CEE_STATUS_BUFFER_TOO_SMALL = 7,
  CEE_STATUS_PANIC = 8,
} CeeStatus;

/**
 * Matrices that can be copied out of a solution.
 */
typedef enum CeeMatrix {
  /**
   * Coefficients of A(z), ℓn × ℓ.
   */
  CEE_MATRIX_A = 0,
  CEE_MATRIX_B = 1,
  CEE_MATRIX_SIGMA = 2,
  /**
   * ℓ × ℓ normalization factor.
   */
  CEE_MATRIX_R = 3,
  CEE_MATRIX_G = 4,
  CEE_MATRIX_K = 5,
  /**
   * ℓn × ℓn state covariance.
   */
  CEE_MATRIX_P = 6,
} CeeMatrix;

typedef struct CeeProblem CeeProblem;

typedef struct CeeSolution CeeSolution;

/**
 * Solver settings mirroring the `[solver]` table of a problem file.
 */
typedef struct CeeOptions {
  size_t max_steps;
  double newton_tol;
  double rank_tol;
  size_t grid;
  double initial_step;
  double min_step;
  size_t max_newton_iters;
} CeeOptions;

typedef struct CeeReport {
  double interp_residual;
  double spectral_residual;
  double pr_min_eig;
  bool stable_a;
  size_t rank_p;
  bool pass;
} CeeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. Valid until the next call.
 */
const char *cee_last_error(void);

struct CeeOptions cee_options_default(void);

/**
 * Parses a problem file. On success `*out` owns a new handle.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CeeStatus cee_problem_from_toml(const char *toml, struct CeeProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`cee_problem_from_toml`] not yet freed.
 */
void cee_problem_free(struct CeeProblem *problem);

/**
 * Options stored in the problem file, with defaults for absent entries.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum CeeStatus cee_problem_options(const struct CeeProblem *problem, struct CeeOptions *out);

/**
 * Solves the problem. `options` may be null to use the problem's own options.
 *
 * # Safety
 * `problem` must be a live handle, `options` null or valid, `out` a valid pointer.
 */
enum CeeStatus cee_solve(const struct CeeProblem *problem,
                         const struct CeeOptions *options,
                         struct CeeSolution **out);

/**
 * # Safety
 * `solution` must be null or a handle from [`cee_solve`] not yet freed.
 */
void cee_solution_free(struct CeeSolution *solution);

/**
 * Writes ℓ, n, rank P and the number of continuation steps. Any output pointer may be null.
 *
 * # Safety
 * `solution` must be a live handle; non-null outputs must be valid.
 */
enum CeeStatus cee_solution_info(const struct CeeSolution *solution,
                                 size_t *ell,
                                 size_t *n,
                                 size_t *rank_p,
                                 size_t *steps);

/**
 * Copies a matrix row-major into `buf`, which must hold at least rows·cols values.
 *
 * `rows` and `cols` are written even when the buffer is too small, so a call with a null
 * `buf` and `len = 0` queries the shape.
 *
 * # Safety
 * `solution` must be a live handle; `buf` must be null or valid for `len` writes.
 */
enum CeeStatus cee_solution_matrix(const struct CeeSolution *solution,
                                   enum CeeMatrix which,
                                   double *buf,
                                   size_t len,
                                   size_t *rows,
                                   size_t *cols);

/**
 * Certifies a solution against a problem on a `grid`-point unit-circle sample.
 * Returns `CertificationFailed` (with `*out` filled) when a threshold is missed.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum CeeStatus cee_certify(const struct CeeSolution *solution,
                           const struct CeeProblem *problem,
                           size_t grid,
                           struct CeeReport *out);

/**
 * Serializes a solution in the solution-file format. Free the string with [`cee_string_free`].
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum CeeStatus cee_solution_to_toml(const struct CeeSolution *solution, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void cee_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CEE_H */
