#ifndef DTN_LAB_H
#define DTN_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum DtnStatus {
  DTN_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DTN_STATUS_NULL_POINTER = 1,
  /**
   * Invalid configuration, grid parameters or JSON.
   */
  DTN_STATUS_CONFIG = 2,
  /**
   * Component count, length or grid mismatch.
   */
  DTN_STATUS_DIMENSION = 3,
  /**
   * Argument outside the operation's domain, singular evaluation or a
   * vanishing denominator.
   */
  DTN_STATUS_DOMAIN = 4,
  /**
   * File system failure.
   */
  DTN_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  DTN_STATUS_PANIC = 6,
} DtnStatus;

/**
 * Opaque periodic boundary field.
 */
typedef struct DtnField DtnField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *dtn_version(void);

/**
 * Message describing the most recent failure on this thread, or an empty
 * string. Valid until the next call into the library on the same thread.
 */
const char *dtn_last_error_message(void);

/**
 * Creates a field with `components` components on n equispaced points of
 * [0, period) from `n * components` samples.
 *
 * # Safety
 * `samples` must point to `n * components` readable doubles and `out` must
 * be a valid pointer to write the handle to.
 */
enum DtnStatus dtn_field_new(size_t n,
                             double period,
                             size_t components,
                             const double *samples,
                             struct DtnField **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `field` must be null or a handle returned by this library that has not
 * been freed.
 */
void dtn_field_free(struct DtnField *field);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t dtn_field_len(const struct DtnField *field);

/**
 * Number of components, or 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t dtn_field_components(const struct DtnField *field);

/**
 * Copies the samples (component-major) into `out`, which holds `out_len`
 * doubles; `out_len` must equal len × components.
 *
 * # Safety
 * `field` must be a live handle and `out` must point to `out_len` writable
 * doubles.
 */
enum DtnStatus dtn_field_read(const struct DtnField *field, double *out, size_t out_len);

/**
 * Λf for a two-component field.
 *
 * # Safety
 * `f` must be a live handle and `out` a valid pointer.
 */
enum DtnStatus dtn_apply_dtn(const struct DtnField *f, struct DtnField **out);

/**
 * [Λ, η]f for a scalar η and a two-component f on the same grid.
 *
 * # Safety
 * `eta` and `f` must be live handles and `out` a valid pointer.
 */
enum DtnStatus dtn_commutator(const struct DtnField *eta,
                              const struct DtnField *f,
                              struct DtnField **out);

/**
 * Hilbert transform of a scalar field.
 *
 * # Safety
 * `g` must be a live handle and `out` a valid pointer.
 */
enum DtnStatus dtn_hilbert(const struct DtnField *g, struct DtnField **out);

/**
 * The 2×2 DtN symbol at wavenumber κ as interleaved (re, im) pairs in
 * row-major order: out[0..8] = M₁₁, M₁₂, M₂₁, M₂₂.
 *
 * # Safety
 * `out` must point to 8 writable doubles.
 */
enum DtnStatus dtn_symbol(double kappa, double *out);

/**
 * ‖[Λ, η]f‖_p / (‖η‖_{C^{0,1}} ‖f‖_p) for 1 < p < ∞.
 *
 * # Safety
 * `eta` and `f` must be live handles and `out` must point to a writable
 * double.
 */
enum DtnStatus dtn_commutator_ratio(const struct DtnField *eta,
                                    const struct DtnField *f,
                                    double p,
                                    double *out);

/**
 * Stokes fundamental solution in three dimensions at x ≠ 0: Γ written
 * row-major into gamma[0..9] and Π into pi[0..3].
 *
 * # Safety
 * `x` must point to 3 readable doubles, `gamma` to 9 and `pi` to 3
 * writable doubles.
 */
enum DtnStatus dtn_stokeslet(const double *x, double *gamma, double *pi);

/**
 * Runs the experiment described by a JSON config document and writes its
 * outputs to `out_dir` (or the config's `out_dir` when null). `exit_code`
 * receives 0 if every check passed and 1 otherwise. Invalid configs return
 * `DTN_STATUS_CONFIG` with every violation in the error message.
 *
 * # Safety
 * `config_json` must be a nul-terminated UTF-8 string, `out_dir` null or
 * nul-terminated, and `exit_code` a valid pointer.
 */
enum DtnStatus dtn_run_experiment(const char *config_json,
                                  const char *out_dir,
                                  int plots,
                                  int *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DTN_LAB_H */
