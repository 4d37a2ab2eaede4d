#ifndef WALLGROWTH_H
#define WALLGROWTH_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result codes shared by every entry point.
typedef enum WgStatus {
  WG_STATUS_OK = 0,
  WG_STATUS_NULL_POINTER = 1,
  WG_STATUS_INVALID_ARGUMENT = 2,
  WG_STATUS_SIMULATION = 3,
  WG_STATUS_KERNEL = 4,
  WG_STATUS_OUTSIDE_REGION = 5,
  WG_STATUS_BUFFER_TOO_SMALL = 6,
  WG_STATUS_PANIC = 7,
} WgStatus;

// Opaque simulator handle.
typedef struct WgSimulator WgSimulator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code; never null, never freed by the caller.
const char *wg_status_message(enum WgStatus status);

// Create a densely packed simulator with `n_max` levels.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum WgStatus wg_sim_new(uintptr_t n_max, uint64_t seed, struct WgSimulator **out);

// Release a handle from [`wg_sim_new`]. Null is ignored.
//
// # Safety
// `sim` must be null or a handle not yet freed.
void wg_sim_free(struct WgSimulator *sim);

// Run the dynamics until time `t`.
//
// # Safety
// `sim` must be a live handle.
enum WgStatus wg_sim_advance(struct WgSimulator *sim, double t);

// # Safety
// `sim` must be a live handle and `out` writable.
enum WgStatus wg_sim_clock(const struct WgSimulator *sim, double *out);

// Number of particles on flat level `big_n` (1-based).
//
// # Safety
// `sim` must be a live handle and `out` writable.
enum WgStatus wg_sim_level_len(const struct WgSimulator *sim, uintptr_t big_n, uintptr_t *out);

// Copy the positions of level `big_n`, rightmost first, into `buf`.
//
// `*len` receives the particle count even when `cap` is too small.
//
// # Safety
// `sim` must be a live handle, `buf` valid for `cap` writes and `len` writable.
enum WgStatus wg_sim_level_positions(const struct WgSimulator *sim,
                                     uintptr_t big_n,
                                     int64_t *buf,
                                     uintptr_t cap,
                                     uintptr_t *len);

// Correlation kernel `K((n1, a1, t1, s1), (n2, a2, t2, s2))` with `ω = 0`.
//
// `twice_a` is `-1` for `a = −1/2` and `1` for `a = +1/2`.
//
// # Safety
// `out` must be writable.
enum WgStatus wg_kernel(uintptr_t n1,
                        int32_t twice_a1,
                        double t1,
                        uintptr_t s1,
                        uintptr_t n2,
                        int32_t twice_a2,
                        double t2,
                        uintptr_t s2,
                        double *out);

// Limit-shape height at `(ν, η, τ)` inside the liquid region.
//
// # Safety
// `out` must be writable.
enum WgStatus wg_limit_height(double nu, double eta, double tau, double *out);

// Limiting covariance of `p_{2k_i}` and `p_{2k_j}`, on whichever branch the parameters select.
//
// Doubles are converted to rationals exactly before the exact computation.
//
// # Safety
// `out` must be writable.
enum WgStatus wg_covariance(uint32_t k_i,
                            uint32_t k_j,
                            double eta_i,
                            double tau_i,
                            double eta_j,
                            double tau_j,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WALLGROWTH_H */
