/* Generated by cbindgen from the cdgate-ffi crate. Do not edit. */

#ifndef CDGATE_H
#define CDGATE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum CdgStatus {
  CDG_STATUS_OK = 0,
  CDG_STATUS_NULL_POINTER = 1,
  CDG_STATUS_INVALID_UTF8 = 2,
  CDG_STATUS_CONFIG = 3,
  CDG_STATUS_INVALID_PARAMETER = 4,
  // Integration failed: step underflow, non-finite state or trace drift.
  CDG_STATUS_NUMERICAL = 5,
  CDG_STATUS_PHASE_UNDEFINED = 6,
  CDG_STATUS_IO = 7,
  CDG_STATUS_BUFFER_TOO_SMALL = 8,
  CDG_STATUS_INDEX_OUT_OF_RANGE = 9,
  CDG_STATUS_PANIC = 10,
  CDG_STATUS_OTHER = 11,
} CdgStatus;

// Opaque run configuration.
typedef struct CdgConfig CdgConfig;

// Opaque result of a CZ run over the four logical inputs.
typedef struct CdgGateResult CdgGateResult;

// Bell-state preparation score.
typedef struct CdgBellScore {
  double fidelity;
  double fidelity_uncorrected;
  double infidelity;
  double correction_phase;
  double p00;
  double p11;
  double coherence_00_11;
  double leakage;
  double wall_clock_s;
} CdgBellScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *cdg_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cdg_version(void);

// Parses a TOML config. On success `*out` owns a new handle.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum CdgStatus cdg_config_from_toml(const char *toml, struct CdgConfig **out);

// Loads a bundled preset by name.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum CdgStatus cdg_config_from_preset(const char *name, struct CdgConfig **out);

// Sets the field at dotted `path` to a TOML value literal, for example
// `cdg_config_set(cfg, "gate.blockade", "\"2 GHz_over_2pi\"")`. The
// config is left unchanged if the result does not validate.
//
// # Safety
// `cfg` must be a live handle; `path` and `value` NUL-terminated strings.
enum CdgStatus cdg_config_set(struct CdgConfig *cfg, const char *path, const char *value);

// Frees a config handle. NULL is ignored.
//
// # Safety
// `cfg` must come from this library and not be used afterwards.
void cdg_config_free(struct CdgConfig *cfg);

// Prepares and scores the Bell state.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum CdgStatus cdg_bell(const struct CdgConfig *cfg, struct CdgBellScore *out);

// Runs the CZ protocol on the inputs `00, 01, 10, 11` (indices 0 to 3).
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum CdgStatus cdg_gate_run(const struct CdgConfig *cfg, struct CdgGateResult **out);

// Probability of returning to input `index`.
//
// # Safety
// `res` must be a live handle and `out` a valid pointer.
enum CdgStatus cdg_gate_return_population(const struct CdgGateResult *res,
                                          size_t index,
                                          double *out);

// Population leaked outside the `{0, 1, r}` manifold for input `index`.
//
// # Safety
// `res` must be a live handle and `out` a valid pointer.
enum CdgStatus cdg_gate_leakage(const struct CdgGateResult *res, size_t index, double *out);

// Phase of input `index` relative to `|00>`, in `(-pi, pi]`. Fails with
// `PhaseUndefined` for density-matrix runs or vanishing amplitudes.
//
// # Safety
// `res` must be a live handle and `out` a valid pointer.
enum CdgStatus cdg_gate_phase(const struct CdgGateResult *res, size_t index, double *out);

// `phi11 + phi00 - phi01 - phi10`, wrapped to `(-pi, pi]`.
//
// # Safety
// `res` must be a live handle and `out` a valid pointer.
enum CdgStatus cdg_gate_conditional_phase(const struct CdgGateResult *res, double *out);

// Frees a gate result. NULL is ignored.
//
// # Safety
// `res` must come from this library and not be used afterwards.
void cdg_gate_free(struct CdgGateResult *res);

// Samples `Omega0`, the counterdiabatic term and the detuning (rad/us)
// on `2 * points_per_pulse + 1` uniform times (us). Each output array must
// hold `capacity` values. `*written` receives the number of samples; if
// `capacity` is too small nothing is written, `*written` holds the needed
// size and `BufferTooSmall` is returned.
//
// # Safety
// `cfg` must be a live handle, `written` a valid pointer, and each array
// valid for `capacity` writes.
enum CdgStatus cdg_pulse_sample(const struct CdgConfig *cfg,
                                size_t points_per_pulse,
                                double *t_us,
                                double *omega0,
                                double *omega_cd,
                                double *delta,
                                size_t capacity,
                                size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDGATE_H */
