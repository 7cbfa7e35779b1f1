#ifndef ORBITKIT_H
#define ORBITKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum OrbitkitStatus {
  ORBITKIT_STATUS_OK = 0,
  // Null pointer, bad UTF-8, wrong buffer length.
  ORBITKIT_STATUS_INVALID_ARGUMENT = 1,
  // Invalid parameters, configuration or equilibrium.
  ORBITKIT_STATUS_INVALID_INPUT = 2,
  // The hypotheses fail or the solver did not converge.
  ORBITKIT_STATUS_NEGATIVE = 3,
  // A Rust panic was caught at the boundary.
  ORBITKIT_STATUS_PANIC = 4,
} OrbitkitStatus;

// Opaque system bundle.
typedef struct OrbitkitBundle OrbitkitBundle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds the controlled rigid body bundle.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum OrbitkitStatus orbitkit_rigid_body_new(double a1,
                                            double a2,
                                            double a3,
                                            double l,
                                            struct OrbitkitBundle **out);

// Builds the Clebsch bundle; parameters must be positive and distinct.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum OrbitkitStatus orbitkit_clebsch_new(double a1,
                                         double a2,
                                         double a3,
                                         struct OrbitkitBundle **out);

// Builds a bundle from a configuration document (built-in or inline).
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum OrbitkitStatus orbitkit_bundle_from_json(const char *json, struct OrbitkitBundle **out);

// Releases a bundle. Null is ignored.
//
// # Safety
// `bundle` must come from this library and not be used afterwards.
void orbitkit_bundle_free(struct OrbitkitBundle *bundle);

// Phase-space dimension, or 0 for a null handle.
//
// # Safety
// `bundle` must be null or a live handle.
uintptr_t orbitkit_bundle_dimension(const struct OrbitkitBundle *bundle);

// Writes the point of family `family` at amplitude `m` into `coords`.
//
// # Safety
// `family` must be a nul-terminated string and `coords` must hold `len`
// doubles.
enum OrbitkitStatus orbitkit_equilibrium(const struct OrbitkitBundle *bundle,
                                         const char *family,
                                         double m,
                                         double *coords,
                                         uintptr_t len);

// Checks the existence hypotheses at family `family`, amplitude `m`, with
// default tolerances. The JSON report is written to `report_json` whether
// or not the verdict holds.
//
// # Safety
// `family` must be a nul-terminated string; `report_json` must be writable.
enum OrbitkitStatus orbitkit_check(const struct OrbitkitBundle *bundle,
                                   const char *family,
                                   double m,
                                   char **report_json);

// Solves for the periodic orbit of frequency `omega_index` (in the order of
// the check report) at level offset `epsilon`, with default settings.
//
// # Safety
// `family` must be a nul-terminated string; `orbit_json` must be writable.
enum OrbitkitStatus orbitkit_find_orbit(const struct OrbitkitBundle *bundle,
                                        const char *family,
                                        double m,
                                        uintptr_t omega_index,
                                        double epsilon,
                                        char **orbit_json);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void orbitkit_string_free(char *s);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into the library from the same thread.
const char *orbitkit_last_error(void);

// Library version as a static string.
const char *orbitkit_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORBITKIT_H */
