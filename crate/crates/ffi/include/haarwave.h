/* C interface for the haarwave wave-equation solver. */

#ifndef HAARWAVE_H
#define HAARWAVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call. Anything but `HW_STATUS_OK` leaves out-pointers
 * untouched and records a message for [`hw_last_error_message`].
 */
typedef enum HwStatus {
  HW_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  HW_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  HW_STATUS_INVALID_UTF8 = 2,
  /**
   * Arguments were well-formed but out of the accepted domain.
   */
  HW_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The computation itself failed; see the last-error message.
   */
  HW_STATUS_RUNTIME_ERROR = 4,
  /**
   * The requested quantity needs data the problem does not carry.
   */
  HW_STATUS_MISSING_DATA = 5,
  /**
   * An index or buffer size did not match the data.
   */
  HW_STATUS_OUT_OF_RANGE = 6,
  /**
   * An internal invariant broke; the library state is still sound.
   */
  HW_STATUS_PANIC = 7,
} HwStatus;

/**
 * A loaded problem: the equation data and optional exact solution.
 */
typedef struct HwProblem HwProblem;

/**
 * A completed run: recorded snapshots plus the basis that produced them.
 */
typedef struct HwSolution HwSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message recorded by the most recent failure on this thread, as a
 * NUL-terminated string. Valid until the next failing call on the same
 * thread; never null.
 */
const char *hw_last_error_message(void);

/**
 * Number of built-in problems.
 */
uintptr_t hw_builtin_count(void);

/**
 * Name of built-in problem `index`, or null when out of range. The
 * returned string is static; do not free it.
 */
const char *hw_builtin_name(uintptr_t index);

/**
 * Loads the built-in problem `name` into a new handle.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum HwStatus hw_problem_builtin(const char *name, struct HwProblem **out);

/**
 * Loads a problem description from a JSON file into a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum HwStatus hw_problem_load(const char *path, struct HwProblem **out);

/**
 * Frees a problem handle; null is allowed.
 *
 * # Safety
 * `problem` must come from this library and not be freed twice.
 */
void hw_problem_free(struct HwProblem *problem);

/**
 * Evaluates the four compatibility residuals tying the initial data to
 * the boundary and nonlocal data at t = 0. Writes the residuals into
 * `residuals_out[0..4]` and the overall verdict into `all_pass_out`.
 * `quad_n` is the (even, positive) Simpson subinterval count; pass 0 for
 * the default.
 *
 * # Safety
 * `problem` must be a live handle; `residuals_out` must point to at
 * least four doubles; `all_pass_out` must be valid.
 */
enum HwStatus hw_problem_check(const struct HwProblem *problem,
                               double tolerance,
                               uintptr_t quad_n,
                               double *residuals_out,
                               bool *all_pass_out);

/**
 * Runs the solver on `problem` at resolution `level` with step `dt` up to
 * `t_final`, recording snapshots at the `n_times` entries of `times`
 * (each must sit on the time grid). A null `times` with `n_times` 0
 * records the final time only.
 *
 * # Safety
 * `problem` must be a live handle; `times` must point to `n_times`
 * doubles (or be null with `n_times` 0); `out` must be valid.
 */
enum HwStatus hw_solve(const struct HwProblem *problem,
                       uint32_t level,
                       double dt,
                       double t_final,
                       const double *times,
                       uintptr_t n_times,
                       struct HwSolution **out);

/**
 * Frees a solution handle; null is allowed.
 *
 * # Safety
 * `solution` must come from this library and not be freed twice.
 */
void hw_solution_free(struct HwSolution *solution);

/**
 * Number of recorded snapshots; 0 for a null handle.
 *
 * # Safety
 * `solution` must be a live handle or null.
 */
uintptr_t hw_solution_snapshot_count(const struct HwSolution *solution);

/**
 * Writes the time of snapshot `index`.
 *
 * # Safety
 * `solution` must be a live handle; `t_out` must be valid.
 */
enum HwStatus hw_solution_time(const struct HwSolution *solution, uintptr_t index, double *t_out);

/**
 * Writes the max and L2 errors of snapshot `index` against the problem's
 * exact solution. Fails with `HW_STATUS_MISSING_DATA` when the problem
 * has no exact solution.
 *
 * # Safety
 * `solution` must be a live handle; `max_out` and `l2_out` must be valid.
 */
enum HwStatus hw_solution_errors(const struct HwSolution *solution,
                                 uintptr_t index,
                                 double *max_out,
                                 double *l2_out);

/**
 * Evaluates the reconstructed solution of snapshot `index` at `x` in
 * [0, 1].
 *
 * # Safety
 * `solution` must be a live handle; `value_out` must be valid.
 */
enum HwStatus hw_solution_sample(const struct HwSolution *solution,
                                 uintptr_t index,
                                 double x,
                                 double *value_out);

/**
 * Writes the spectral radius of the amplification matrix at resolution
 * `level` and step `dt`, and whether the scheme is stable at the default
 * tolerance.
 *
 * # Safety
 * `radius_out` and `stable_out` must be valid pointers.
 */
enum HwStatus hw_stability_radius(uint32_t level, double dt, double *radius_out, bool *stable_out);

/**
 * Writes the amplification-matrix spectrum at resolution `level` and step
 * `dt` into `re_out`/`im_out`, sorted by decreasing modulus. The spectrum
 * has `2^(level+2)` entries; `capacity` must be at least that, and
 * `len_out` receives the count written.
 *
 * # Safety
 * `re_out` and `im_out` must point to at least `capacity` doubles;
 * `len_out` must be valid.
 */
enum HwStatus hw_stability_spectrum(uint32_t level,
                                    double dt,
                                    double *re_out,
                                    double *im_out,
                                    uintptr_t capacity,
                                    uintptr_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAARWAVE_H */
