#ifndef RABI_TRIANGLE_H
#define RABI_TRIANGLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `q_label` value for a state that carries no translation label.
 */
#define RT_Q_NONE 2

typedef enum RtStatus {
  RT_STATUS_OK = 0,
  RT_STATUS_NULL_POINTER = 1,
  RT_STATUS_INVALID_ARGUMENT = 2,
  RT_STATUS_DOMAIN = 3,
  RT_STATUS_NOT_CONVERGED = 4,
  RT_STATUS_TRUNCATION_CAP = 5,
  RT_STATUS_INSTABILITY = 6,
  RT_STATUS_DIMENSION_MISMATCH = 7,
  RT_STATUS_IO = 8,
  RT_STATUS_PANIC = 9,
} RtStatus;

typedef enum RtPhaseLabel {
  RT_PHASE_LABEL_INCOHERENT = 0,
  RT_PHASE_LABEL_NORMAL_COHERENT = 1,
  RT_PHASE_LABEL_CHIRAL_PLUS = 2,
  RT_PHASE_LABEL_CHIRAL_MINUS = 3,
} RtPhaseLabel;

/**
 * Model parameters; `theta` is in radians.
 */
typedef struct RtParams RtParams;

/**
 * Eigenpairs reduced to their observables.
 */
typedef struct RtSolution RtSolution;

typedef struct RtPhase {
  enum RtPhaseLabel label;
  /**
   * `k` in `q* = 2 pi k / 3`, one of -1, 0, 1.
   */
  int32_t q_star;
  double g1c;
} RtPhase;

typedef struct RtObservables {
  double energy;
  double n_photons;
  double current;
  double chirality;
  double parity;
  /**
   * `k` in `q = 2 pi k / 3`, or [`RT_Q_NONE`].
   */
  int32_t q_label;
  size_t multiplet;
} RtObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rt_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *rt_last_error_message(void);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RtStatus rt_params_new(double omega,
                            double delta,
                            double g1,
                            double j,
                            double theta,
                            struct RtParams **out);

/**
 * # Safety
 * `p` must come from [`rt_params_new`] and not be freed twice. NULL is ignored.
 */
void rt_params_free(struct RtParams *p);

/**
 * Infinite-frequency critical coupling `g1c(q)`, `q = 2 pi k / 3`.
 *
 * # Safety
 * `p` must be a live handle and `out` valid for writing.
 */
enum RtStatus rt_critical_coupling(const struct RtParams *p, int32_t k, double *out);

/**
 * # Safety
 * `p` must be a live handle and both outputs valid for writing.
 */
enum RtStatus rt_tricritical_point(const struct RtParams *p, double *theta_c, double *g_tc);

/**
 * # Safety
 * `p` must be a live handle and `out` valid for writing.
 */
enum RtStatus rt_classify_phase(const struct RtParams *p, struct RtPhase *out);

/**
 * Ground energy of the phase selected by [`rt_classify_phase`].
 *
 * # Safety
 * `p` must be a live handle and `out` valid for writing.
 */
enum RtStatus rt_analytic_ground_energy(const struct RtParams *p, double *out);

/**
 * Lowest `k` eigenstates at photon cutoff `n_tr`. An unconverged solve still
 * returns a handle; check [`rt_solution_converged`].
 *
 * # Safety
 * `p` must be a live handle and `out` valid for a pointer write.
 */
enum RtStatus rt_solve(const struct RtParams *p,
                       size_t n_tr,
                       size_t k,
                       uint64_t seed,
                       struct RtSolution **out);

/**
 * # Safety
 * `s` must be a live solution handle or NULL (returns 0).
 */
size_t rt_solution_count(const struct RtSolution *s);

/**
 * # Safety
 * `s` must be a live solution handle or NULL (returns 0).
 */
size_t rt_solution_n_tr(const struct RtSolution *s);

/**
 * # Safety
 * `s` must be a live solution handle or NULL (returns false).
 */
bool rt_solution_converged(const struct RtSolution *s);

/**
 * Observables of level `i`; degenerate levels come in the translation eigenbasis.
 *
 * # Safety
 * `s` must be a live solution handle and `out` valid for writing.
 */
enum RtStatus rt_solution_observables(const struct RtSolution *s,
                                      size_t i,
                                      struct RtObservables *out);

/**
 * # Safety
 * `s` must come from [`rt_solve`] and not be freed twice. NULL is ignored.
 */
void rt_solution_free(struct RtSolution *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RABI_TRIANGLE_H */
