#ifndef TRAPSCATTER_H
#define TRAPSCATTER_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_ARGUMENT = 2,
  TS_STATUS_DIVERGENT_INPUT = 3,
  TS_STATUS_NO_CONVERGENCE = 4,
  TS_STATUS_OVERFLOW_RISK = 5,
  TS_STATUS_TRUNCATION_TOO_SMALL = 6,
  TS_STATUS_COST_GUARD = 7,
  TS_STATUS_CONFIG = 8,
  TS_STATUS_PANIC = 9,
} TsStatus;

// Per-channel validity of a rate.
typedef enum TsValidity {
  TS_VALIDITY_VALID = 0,
  TS_VALIDITY_EXTRAPOLATED = 1,
  TS_VALIDITY_OUT_OF_RANGE = 2,
  TS_VALIDITY_FAILED = 3,
} TsValidity;

// Exact discrete-spectrum ensemble.
typedef struct TsDiscreteEnsemble TsDiscreteEnsemble;

// Continuum ideal-gas ensemble.
typedef struct TsEnsemble TsEnsemble;

// Shared numerical settings and shape-function cache.
typedef struct TsEvaluator TsEvaluator;

// Differential rates per unit solid angle. `flags` follows the channel
// order rayleigh, diffraction, bose_0m, bose_mm.
typedef struct TsRates {
  double rayleigh;
  double diffraction;
  double bose_0m;
  double bose_mm;
  double total;
  enum TsValidity flags[4];
} TsRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next library call on the same thread.
const char *ts_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ts_version(void);

double ts_critical_temperature(uint64_t n_total);

// Ensemble of `n_total` atoms at absolute temperature `temperature`.
//
// # Safety
// `out` must be null or valid for writes.
enum TsStatus ts_ensemble_new(uint64_t n_total, double temperature, struct TsEnsemble **out);

// Ensemble at `T = ratio * Tc(n_total)`.
//
// # Safety
// `out` must be null or valid for writes.
enum TsStatus ts_ensemble_new_reduced(uint64_t n_total, double ratio, struct TsEnsemble **out);

// # Safety
// `ens` must be null or a handle from `ts_ensemble_new*` not yet freed.
void ts_ensemble_free(struct TsEnsemble *ens);

// Absolute temperature; NaN for a null handle.
//
// # Safety
// `ens` must be null or a live ensemble handle.
double ts_ensemble_temperature(const struct TsEnsemble *ens);

// Critical temperature of the continuum gas; NaN for a null handle.
//
// # Safety
// `ens` must be null or a live ensemble handle.
double ts_ensemble_t_critical(const struct TsEnsemble *ens);

// Self-consistent chemical potential; NaN for a null handle.
//
// # Safety
// `ens` must be null or a live ensemble handle.
double ts_ensemble_mu(const struct TsEnsemble *ens);

// Condensate number from the continuum fraction law (0 above Tc); NaN for a null handle.
//
// # Safety
// `ens` must be null or a live ensemble handle.
double ts_ensemble_n_condensate(const struct TsEnsemble *ens);

// Thermal-cloud atom number; NaN for a null handle.
//
// # Safety
// `ens` must be null or a live ensemble handle.
double ts_ensemble_n_excited(const struct TsEnsemble *ens);

// Evaluator with default tolerances and tabulated shape function.
//
// # Safety
// `out` must be null or valid for writes.
enum TsStatus ts_evaluator_new(struct TsEvaluator **out);

// # Safety
// `eval` must be null or a handle from `ts_evaluator_new` not yet freed.
void ts_evaluator_free(struct TsEvaluator *eval);

// Semiclassical rates at momentum transfer `delta` for incident wavenumber
// `k_incident`. Reusing one evaluator across calls shares its shape tables.
//
// # Safety
// `ens` and `eval` must be live handles and `out` valid for writes.
enum TsStatus ts_decompose(const struct TsEnsemble *ens,
                           const struct TsEvaluator *eval,
                           double k_incident,
                           double delta,
                           struct TsRates *out);

// `|<m| e^{i delta x} |m'>|^2` for the 1D oscillator.
//
// # Safety
// `out` must be null or valid for writes.
enum TsStatus ts_overlap_exact(uint64_t m, uint64_t m_prime, double delta, double *out);

// Trilogarithm for real `x` in `[0, 1]`.
//
// # Safety
// `out` must be null or valid for writes.
enum TsStatus ts_polylog3(double x, double *out);

// Two-occupation thermal kernel `P(a, b)` with default tolerances.
//
// # Safety
// `out` must be null or valid for writes.
enum TsStatus ts_p_kernel(double a, double b, double *out);

// Exact discrete ensemble. `epsilon_max = 0` picks the default truncation.
//
// # Safety
// `out` must be null or valid for writes.
enum TsStatus ts_discrete_new(uint64_t n_total,
                              double temperature,
                              uint64_t epsilon_max,
                              struct TsDiscreteEnsemble **out);

// # Safety
// `ens` must be null or a handle from `ts_discrete_new` not yet freed.
void ts_discrete_free(struct TsDiscreteEnsemble *ens);

// Ground-level occupation; NaN for a null handle.
//
// # Safety
// `ens` must be null or a live handle.
double ts_discrete_n0(const struct TsDiscreteEnsemble *ens);

// Chemical potential; NaN for a null handle.
//
// # Safety
// `ens` must be null or a live handle.
double ts_discrete_mu(const struct TsDiscreteEnsemble *ens);

// Exact rates by direct summation over the discrete spectrum.
//
// # Safety
// `ens` must be a live handle and `out` valid for writes.
enum TsStatus ts_exact_breakdown(const struct TsDiscreteEnsemble *ens,
                                 double delta,
                                 struct TsRates *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRAPSCATTER_H */
