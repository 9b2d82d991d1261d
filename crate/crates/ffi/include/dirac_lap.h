#ifndef DIRAC_LAP_H
#define DIRAC_LAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum DlapStatus {
  DLAP_STATUS_OK = 0,
  /**
   * An argument or configuration was rejected.
   */
  DLAP_STATUS_INVALID = 1,
  /**
   * A required pointer was null.
   */
  DLAP_STATUS_NULL_POINTER = 2,
  /**
   * The numerics failed: no convergence, memory cap, singular system.
   */
  DLAP_STATUS_NUMERICAL = 3,
  /**
   * An internal panic was caught.
   */
  DLAP_STATUS_PANIC = 4,
} DlapStatus;

/**
 * A validated run configuration.
 */
typedef struct DlapConfig DlapConfig;

/**
 * A diagonalized periodic Hamiltonian `D_m + V`.
 */
typedef struct DlapHamiltonian DlapHamiltonian;

/**
 * The Clifford family `alpha_1..alpha_n, beta`.
 */
typedef struct DlapMatrices DlapMatrices;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after a success.
 *
 * The pointer stays valid until the next call into the library from the same thread.
 */
const char *dlap_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dlap_version(void);

/**
 * Build the Clifford family for dimension `n >= 2`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DlapStatus dlap_matrices_new(size_t n, struct DlapMatrices **out);

/**
 * Spinor dimension of the family, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or come from [`dlap_matrices_new`].
 */
size_t dlap_matrices_spinor_dim(const struct DlapMatrices *handle);

/**
 * Copy one matrix as interleaved `(re, im)` pairs in row-major order.
 *
 * `which` in `0..n` selects `alpha_{which+1}`, `which == n` selects `beta`.
 * `out` must hold `2 * s * s` doubles, `s` the spinor dimension.
 *
 * # Safety
 * `handle` must come from [`dlap_matrices_new`]; `out` must point to `len` doubles.
 */
enum DlapStatus dlap_matrices_get(const struct DlapMatrices *handle,
                                  size_t which,
                                  double *out,
                                  size_t len);

/**
 * Release a handle from [`dlap_matrices_new`]. Null is ignored.
 *
 * # Safety
 * `handle` must be null or an unreleased handle from [`dlap_matrices_new`].
 */
void dlap_matrices_free(struct DlapMatrices *handle);

/**
 * Free Schrodinger resolvent kernel `g(r)` at `z > 0`; `branch` is `+1` or `-1`.
 *
 * # Safety
 * `re` and `im` must be valid pointers to one double each.
 */
enum DlapStatus dlap_schrodinger_kernel(size_t n,
                                        double z,
                                        double r,
                                        int32_t branch,
                                        double *re,
                                        double *im);

/**
 * Parse and validate a JSON run configuration.
 *
 * On `DLAP_STATUS_INVALID` the error message lists every violation, one per line.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer for one handle.
 */
enum DlapStatus dlap_config_parse(const char *json, struct DlapConfig **out);

/**
 * Run a configuration, writing its tables and `summary.json` into `out_dir`.
 *
 * # Safety
 * `config` must come from [`dlap_config_parse`]; `out_dir` must be NUL-terminated.
 */
enum DlapStatus dlap_run(const struct DlapConfig *config, const char *out_dir);

/**
 * Release a handle from [`dlap_config_parse`]. Null is ignored.
 *
 * # Safety
 * `handle` must be null or an unreleased handle from [`dlap_config_parse`].
 */
void dlap_config_free(struct DlapConfig *handle);

/**
 * Assemble and diagonalize `D_m + V` on a periodic grid `[-L, L)^n`.
 *
 * `potential_json` describes `V` in the configuration format (e.g.
 * `{"kind":"gaussian_bump","coupling":-2,"width":1}`); null means `V = 0`.
 *
 * # Safety
 * `potential_json` must be null or NUL-terminated; `out` a valid pointer for one handle.
 */
enum DlapStatus dlap_hamiltonian_new(size_t n,
                                     double m,
                                     double half_width,
                                     size_t points_per_axis,
                                     const char *potential_json,
                                     struct DlapHamiltonian **out);

/**
 * Matrix dimension of the Hamiltonian, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or come from [`dlap_hamiltonian_new`].
 */
size_t dlap_hamiltonian_dim(const struct DlapHamiltonian *handle);

/**
 * Copy the ascending eigenvalues into `out`, which must hold `dim` doubles.
 *
 * # Safety
 * `handle` must come from [`dlap_hamiltonian_new`]; `out` must point to `len` doubles.
 */
enum DlapStatus dlap_hamiltonian_eigenvalues(const struct DlapHamiltonian *handle,
                                             double *out,
                                             size_t len);

/**
 * Number of eigenpairs classified as bound states.
 *
 * # Safety
 * `handle` must be null or come from [`dlap_hamiltonian_new`].
 */
size_t dlap_hamiltonian_bound_states(const struct DlapHamiltonian *handle);

/**
 * Release a handle from [`dlap_hamiltonian_new`]. Null is ignored.
 *
 * # Safety
 * `handle` must be null or an unreleased handle from [`dlap_hamiltonian_new`].
 */
void dlap_hamiltonian_free(struct DlapHamiltonian *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIRAC_LAP_H */
