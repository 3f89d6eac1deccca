#ifndef HYDROELASTIC_H
#define HYDROELASTIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_UTF8 = 2,
  HC_STATUS_INVALID_CONFIG = 3,
  HC_STATUS_IO = 4,
  HC_STATUS_NON_CONVERGENCE = 5,
  HC_STATUS_INDEX_OUT_OF_RANGE = 6,
  HC_STATUS_INVALID_ARGUMENT = 7,
  HC_STATUS_INTERNAL = 8,
} HcStatus;

// Opaque simulation handle.
typedef struct HcSimulation HcSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Build a simulation from scenario TOML text. Relative mesh paths resolve
// against `base_dir`, which may be null (current directory).
//
// # Safety
// `toml` and a non-null `base_dir` must be NUL-terminated strings; `out`
// must be writable.
enum HcStatus hc_simulation_new_from_toml(const char *toml,
                                          const char *base_dir,
                                          struct HcSimulation **out);

// Build a simulation from a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum HcStatus hc_simulation_load(const char *path, struct HcSimulation **out);

// Release a handle. Null is ignored.
//
// # Safety
// `sim` must come from this library and not be used afterwards.
void hc_simulation_free(struct HcSimulation *sim);

// Advance `steps` time steps. A step that fails to converge is retried once
// as two half steps; if that fails too the state is left at the last good
// step and `HC_STATUS_NON_CONVERGENCE` is returned.
//
// # Safety
// `sim` must be a live handle.
enum HcStatus hc_simulation_step(struct HcSimulation *sim, uint32_t steps);

// Simulated time (s).
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum HcStatus hc_simulation_time(const struct HcSimulation *sim, double *out);

// Number of bodies, anchored ones included.
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum HcStatus hc_simulation_body_count(const struct HcSimulation *sim, size_t *out);

// Contact constraints used by the most recent step.
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum HcStatus hc_simulation_contact_count(const struct HcSimulation *sim, size_t *out);

// Steps that needed a half-step retry so far.
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum HcStatus hc_simulation_retry_count(const struct HcSimulation *sim, uint64_t *out);

// Pose of body `index` as `[x, y, z, qw, qx, qy, qz]`.
//
// # Safety
// `sim` must be a live handle; `out` must hold 7 doubles.
enum HcStatus hc_simulation_body_pose(const struct HcSimulation *sim, size_t index, double *out);

// World-frame velocity of body `index` as `[wx, wy, wz, vx, vy, vz]`;
// zero for anchored bodies.
//
// # Safety
// `sim` must be a live handle; `out` must hold 6 doubles.
enum HcStatus hc_simulation_body_velocity(const struct HcSimulation *sim,
                                          size_t index,
                                          double *out);

// Combined normal pressure gradient of two bodies; pass `INFINITY` for a
// rigid side. Both inputs must be positive.
//
// # Safety
// `out` must be writable.
enum HcStatus hc_effective_gradient(double g_a, double g_b, double *out);

// Message of the last failure on this thread; empty if none. The pointer is
// valid until the next failing call on the same thread.
const char *hc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYDROELASTIC_H */
