#ifndef COSRA_H
#define COSRA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum CosraStatus {
  COSRA_STATUS_OK = 0,
  COSRA_STATUS_NULL_POINTER = 1,
  COSRA_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON or CSV.
  COSRA_STATUS_PARSE = 3,
  // The input is well-formed but describes an invalid game or argument.
  COSRA_STATUS_VALIDATION = 4,
  // The solver failed (resolution too coarse, iteration cap, ...).
  COSRA_STATUS_SOLVER = 5,
  // Output buffer too small.
  COSRA_STATUS_BUFFER_TOO_SMALL = 6,
  COSRA_STATUS_PANIC = 7,
} CosraStatus;

// Opaque game handle.
typedef struct CosraGame CosraGame;

// Opaque solution handle.
typedef struct CosraSolution CosraSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *cosra_last_error_message(void);

// Parses a game description (JSON text) into a new handle.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer to
// writable storage for one handle.
enum CosraStatus cosra_game_from_json(const char *json, struct CosraGame **out);

// The built-in Leslie population game.
struct CosraGame *cosra_game_leslie_benchmark(void);

// # Safety
// `game` must be NULL or a handle from this library not yet freed.
void cosra_game_free(struct CosraGame *game);

// State dimension, or 0 for NULL.
//
// # Safety
// `game` must be NULL or a live handle.
size_t cosra_game_dim(const struct CosraGame *game);

// Solves `game` on the lattice of resolution `resolution`. A `stop` of
// zero or less selects the default threshold `1/resolution`.
//
// # Safety
// `game` must be a live handle and `out` valid writable storage.
enum CosraStatus cosra_solve(const struct CosraGame *game,
                             size_t resolution,
                             double stop,
                             struct CosraSolution **out);

// # Safety
// `sol` must be NULL or a handle from [`cosra_solve`] not yet freed.
void cosra_solution_free(struct CosraSolution *sol);

// Copies the value function (one entry per grid point) into `buf`.
//
// # Safety
// `sol` must be a live handle and `buf` must point to `len` writable
// doubles.
enum CosraStatus cosra_solution_values(const struct CosraSolution *sol, double *buf, size_t len);

// Hilbert projective distance between two length-`n` nonnegative vectors.
//
// # Safety
// `x` and `y` must point to `n` readable doubles, `out` to one writable.
enum CosraStatus cosra_hilbert(const double *x, const double *y, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COSRA_H */
