#ifndef RABI_VQE_H
#define RABI_VQE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RabiStatus {
  RABI_STATUS_OK = 0,
  RABI_STATUS_NULL_POINTER = 1,
  RABI_STATUS_INVALID_ARGUMENT = 2,
  RABI_STATUS_NUMERICAL = 3,
  RABI_STATUS_BUFFER_TOO_SMALL = 4,
  RABI_STATUS_PANIC = 5,
} RabiStatus;

/**
 * Hamiltonian, compiled ansatz and exact ground state for one parameter point.
 */
typedef struct RabiProblem RabiProblem;

/**
 * Result of one optimization.
 */
typedef struct RabiRun RabiRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a problem for `H = ω₀ a†a + (Ω/2) σz − λ (a + a†) σx` with Fock
 * states `0..=fock_cutoff`. On success `*out_problem` owns the new handle.
 *
 * # Safety
 * `out_problem` must be a valid pointer to writable storage for one handle.
 */
enum RabiStatus rabi_problem_new(double omega0,
                                 double omega,
                                 double lambda,
                                 size_t fock_cutoff,
                                 struct RabiProblem **out_problem);

/**
 * # Safety
 * `problem` must be null or a handle from [`rabi_problem_new`] not yet freed.
 */
void rabi_problem_free(struct RabiProblem *problem);

/**
 * Exact ground energy of the truncated Hamiltonian.
 *
 * # Safety
 * Pointers must be valid.
 */
enum RabiStatus rabi_problem_ground_energy(const struct RabiProblem *problem, double *out_energy);

/**
 * Energy of the ansatz state for `len = 3p` angles laid out as
 * `α₁ β₁ γ₁ α₂ …`.
 *
 * # Safety
 * `thetas` must point to `len` readable doubles (or `len` is 0).
 */
enum RabiStatus rabi_problem_cost(const struct RabiProblem *problem,
                                  const double *thetas,
                                  size_t len,
                                  double *out_energy);

/**
 * Fidelity of the ansatz state with the exact ground state.
 *
 * # Safety
 * As for [`rabi_problem_cost`].
 */
enum RabiStatus rabi_problem_fidelity(const struct RabiProblem *problem,
                                      const double *thetas,
                                      size_t len,
                                      double *out_fidelity);

/**
 * Optimizes a depth-`depth` circuit with the default optimizer settings
 * apart from `restarts` and `seed`. `warm`, if non-null, holds the
 * `3(depth − 1)` angles of a shallower solution.
 *
 * # Safety
 * `warm` must point to `warm_len` readable doubles when non-null; `out_run`
 * must be writable.
 */
enum RabiStatus rabi_problem_optimize(const struct RabiProblem *problem,
                                      size_t depth,
                                      size_t restarts,
                                      uint64_t seed,
                                      const double *warm,
                                      size_t warm_len,
                                      struct RabiRun **out_run);

/**
 * # Safety
 * `run` must be null or a handle from [`rabi_problem_optimize`] not yet freed.
 */
void rabi_run_free(struct RabiRun *run);

/**
 * Depth, best energy and infidelity of a run. Any output pointer may be null.
 *
 * # Safety
 * `run` must be a live handle; non-null outputs must be writable.
 */
enum RabiStatus rabi_run_summary(const struct RabiRun *run,
                                 size_t *out_depth,
                                 double *out_energy,
                                 double *out_infidelity);

/**
 * Copies the optimized angles into `buf`, which must hold `3 · depth` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum RabiStatus rabi_run_thetas(const struct RabiRun *run, double *buf, size_t len);

/**
 * Wigner function of the ansatz state's boson mode on a square grid with
 * `points` samples on `[min, max]` per axis, written row-major with `q`
 * along rows into `buf` (`points²` doubles).
 *
 * # Safety
 * `thetas` as for [`rabi_problem_cost`]; `buf` must point to `buf_len`
 * writable doubles.
 */
enum RabiStatus rabi_problem_wigner(const struct RabiProblem *problem,
                                    const double *thetas,
                                    size_t len,
                                    double min,
                                    double max,
                                    size_t points,
                                    double *buf,
                                    size_t buf_len);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to fit, into `buf`. Returns the full message length excluding
 * the terminator, so a caller can size a second attempt.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t rabi_last_error_message(char *buf, size_t len);

/**
 * Static NUL-terminated version string.
 */
const char *rabi_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RABI_VQE_H */
