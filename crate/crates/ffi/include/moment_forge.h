#ifndef MOMENT_FORGE_H
#define MOMENT_FORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_NULL_POINTER = 1,
  MF_STATUS_INVALID_ARGUMENT = 2,
  MF_STATUS_UNKNOWN_MODEL = 3,
  MF_STATUS_INVALID_STATE = 4,
  MF_STATUS_SINGULAR = 5,
  MF_STATUS_BUFFER_TOO_SMALL = 6,
  MF_STATUS_INTERNAL = 7,
} MfStatus;

// Hyperbolicity verdict of a spectrum.
typedef enum MfVerdict {
  MF_VERDICT_HYPERBOLIC = 0,
  MF_VERDICT_NON_REAL = 1,
  MF_VERDICT_DEFECTIVE = 2,
} MfVerdict;

// A configured moment model.
typedef struct MfModel MfModel;

// A model assembled at one state.
typedef struct MfSystem MfSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library from the same thread.
const char *mf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mf_version(void);

// Creates a preset model (e.g. "HME1D", "HR13") of order `order` in `dim`
// dimensions. Returns NULL on failure with the reason in `*status`.
//
// # Safety
// `name` must be a NUL-terminated string; `status` may be NULL.
struct MfModel *mf_model_new(const char *name, size_t order, size_t dim, enum MfStatus *status);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must come from [`mf_model_new`] and not have been freed.
void mf_model_free(struct MfModel *model);

// Number of model variables, 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t mf_model_system_size(const struct MfModel *model);

// Spatial dimension, 0 for NULL.
//
// # Safety
// `model` must be NULL or a live handle.
size_t mf_model_dim(const struct MfModel *model);

// Assembles the model at the Maxwellian (ρ, u, θ); `u` holds `dim` values.
// Models with a tensor temperature use Θ = θI.
//
// # Safety
// `model` must be a live handle, `u` must point to `dim` doubles and
// `status` may be NULL.
struct MfSystem *mf_model_assemble_maxwellian(const struct MfModel *model,
                                              double rho,
                                              const double *u,
                                              double theta,
                                              enum MfStatus *status);

// Assembles the model at a state given as JSON
// (`{"rho":..,"u":[..],"theta":..,"f":{"ordinal":value,..}}`).
//
// # Safety
// `model` must be a live handle, `json` a NUL-terminated string and
// `status` may be NULL.
struct MfSystem *mf_model_assemble_json(const struct MfModel *model,
                                        const char *json,
                                        enum MfStatus *status);

// Releases a system. NULL is ignored.
//
// # Safety
// `system` must come from an `mf_model_assemble_*` call and not have been freed.
void mf_system_free(struct MfSystem *system);

// Number of variables n; matrices have n×n entries. 0 for NULL.
//
// # Safety
// `system` must be NULL or a live handle.
size_t mf_system_size(const struct MfSystem *system);

// Copies the time-derivative matrix B (row-major) into `out[0..len]`.
//
// # Safety
// `system` must be a live handle and `out` must hold `len` doubles.
enum MfStatus mf_system_matrix_b(const struct MfSystem *system, double *out, size_t len);

// Copies the flux matrix of direction `d` (0-based): the coefficient of
// ∂w/∂x_d in B ∂w/∂t + Σ_d F_d ∂w/∂x_d = source.
//
// # Safety
// `system` must be a live handle and `out` must hold `len` doubles.
enum MfStatus mf_system_flux(const struct MfSystem *system, size_t d, double *out, size_t len);

// Copies the Jacobian B⁻¹F_d.
//
// # Safety
// `system` must be a live handle and `out` must hold `len` doubles.
enum MfStatus mf_system_jacobian(const struct MfSystem *system, size_t d, double *out, size_t len);

// Eigenvalues of Σ n_d B⁻¹F_d for the unit direction `n` (`dim` values),
// sorted by real part, written to `re[0..len]` and `im[0..len]`, plus the
// hyperbolicity verdict under the default tolerances.
//
// # Safety
// `system` must be a live handle, `n` must point to `dim` doubles, `re`
// and `im` must hold `len` doubles each and `verdict` may be NULL.
enum MfStatus mf_system_eigenvalues(const struct MfSystem *system,
                                    const double *n,
                                    double *re,
                                    double *im,
                                    size_t len,
                                    enum MfVerdict *verdict);

// Random-state hyperbolicity scan; writes the hyperbolic fraction and the
// number of non-real trials.
//
// # Safety
// `model` must be a live handle; `fraction` and `non_real` may be NULL.
enum MfStatus mf_scan(const struct MfModel *model,
                      uint64_t trials,
                      double amplitude,
                      uint64_t seed,
                      double *fraction,
                      uint64_t *non_real);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOMENT_FORGE_H */
