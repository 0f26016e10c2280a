#ifndef IIMP_H
#define IIMP_H

/* Generated by cbindgen from the iimp-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum IimpStatus {
  IimpStatus_Ok = 0,
  /**
   * A pointer argument was null or a scalar argument out of range.
   */
  IimpStatus_InvalidArgument = 1,
  /**
   * Model parameters failed validation.
   */
  IimpStatus_InvalidParams = 2,
  /**
   * Dimension mismatch between operands.
   */
  IimpStatus_ShapeMismatch = 3,
  /**
   * State construction failed (normalization or truncation deficit).
   */
  IimpStatus_InvalidState = 4,
  /**
   * No common derivative order was found.
   */
  IimpStatus_UndetectableOrder = 5,
  /**
   * Target and reference expectations vanish at different orders.
   */
  IimpStatus_OrderMismatch = 6,
  /**
   * The reference calibration expectation is (numerically) zero.
   */
  IimpStatus_DegenerateReference = 7,
  /**
   * The reference signal fell below the roundoff guard.
   */
  IimpStatus_UnderflowGuard = 8,
  /**
   * Any other library error; see `iimp_last_error_message`.
   */
  IimpStatus_Internal = 9,
} IimpStatus;

/**
 * Model kind selector.
 */
typedef enum IimpModelKind {
  IimpModelKind_Rabi = 0,
  IimpModelKind_Jc = 1,
  IimpModelKind_Dicke = 2,
  IimpModelKind_Tc = 3,
} IimpModelKind;

/**
 * Directly measured observable selector.
 */
typedef enum IimpObservable {
  IimpObservable_SigmaZ = 0,
  IimpObservable_PhotonNumber = 1,
  IimpObservable_Jz = 2,
} IimpObservable;

/**
 * Opaque handle: one Hamiltonian with its parameters.
 */
typedef struct IimpModel IimpModel;

/**
 * Opaque handle: a pure state on the model's full product space.
 */
typedef struct IimpState IimpState;

/**
 * Indirect-measurement outcome returned by value.
 */
typedef struct IimpEstimate {
  size_t order_n;
  double ratio_exact;
  double ratio_numeric;
  double ratio_numeric_error;
  double estimate;
  double reference_value;
} IimpEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a model. `n_atoms` must be 1 for the single-atom kinds. On success
 * `*out` owns the handle; release it with `iimp_model_free`.
 */
enum IimpStatus iimp_model_new(enum IimpModelKind kind,
                               double omega_a,
                               double omega_0,
                               double g,
                               double kerr_u,
                               double gamma,
                               size_t p,
                               size_t n_atoms,
                               size_t cutoff,
                               struct IimpModel **out);

void iimp_model_free(struct IimpModel *model);

/**
 * Total Hilbert-space dimension of the model.
 */
size_t iimp_model_dimension(const struct IimpModel *model);

/**
 * Number state |n> of the field, atoms all in the ground state.
 */
enum IimpStatus iimp_state_fock(const struct IimpModel *model, size_t n, struct IimpState **out);

/**
 * Coherent state alpha = re + i im of the field, atoms all ground.
 */
enum IimpStatus iimp_state_coherent(const struct IimpModel *model,
                                    double re,
                                    double im,
                                    struct IimpState **out);

/**
 * Vacuum field with a two-level atom c_g |g> + c_e |e> (single-atom kinds).
 */
enum IimpStatus iimp_state_atom(const struct IimpModel *model,
                                double c_g_re,
                                double c_g_im,
                                double c_e_re,
                                double c_e_im,
                                struct IimpState **out);

/**
 * State from raw amplitudes over the full product space (length must equal
 * `iimp_model_dimension`); the vector is normalized on entry.
 */
enum IimpStatus iimp_state_from_amplitudes(const struct IimpModel *model,
                                           const double *re,
                                           const double *im,
                                           size_t len,
                                           struct IimpState **out);

void iimp_state_free(struct IimpState *state);

/**
 * Exact t -> 0 ratio of the expectation changes from the nested-commutator
 * expectations.
 */
enum IimpStatus iimp_ratio_limit_exact(const struct IimpModel *model,
                                       enum IimpObservable observable,
                                       const struct IimpState *target,
                                       const struct IimpState *reference,
                                       double *out);

/**
 * Extrapolated t -> 0 ratio. Pass `t0 <= 0` and/or `levels == 0` for the
 * defaults. `error_estimate` may be null.
 */
enum IimpStatus iimp_ratio_limit_numeric(const struct IimpModel *model,
                                         enum IimpObservable observable,
                                         const struct IimpState *target,
                                         const struct IimpState *reference,
                                         double t0,
                                         size_t levels,
                                         double *out_ratio,
                                         double *out_error_estimate);

/**
 * Calibrated indirect estimate. `reference_value` may be null, in which case
 * the reference nested-commutator expectation is computed internally.
 */
enum IimpStatus iimp_indirect_estimate(const struct IimpModel *model,
                                       enum IimpObservable observable,
                                       const struct IimpState *target,
                                       const struct IimpState *reference,
                                       const double *reference_value,
                                       struct IimpEstimate *out);

/**
 * Quantum Fisher information of the coupling g at time t (units of
 * 1/omega_a). Pass `h <= 0` for the default finite-difference step.
 */
enum IimpStatus iimp_qfi_pure(const struct IimpModel *model,
                              const struct IimpState *state,
                              double t,
                              double h,
                              double *out);

/**
 * Exact t -> 0 QFI ratio: the coupling-derivative variance ratio.
 */
enum IimpStatus iimp_qfi_short_time_ratio(const struct IimpModel *model,
                                          const struct IimpState *target,
                                          const struct IimpState *reference,
                                          double *out);

/**
 * Copy the last error message of this thread into `buf` (truncated to
 * `len - 1` bytes, always NUL-terminated). Returns the full message length.
 */
size_t iimp_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *iimp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IIMP_H */
