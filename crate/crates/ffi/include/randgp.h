#ifndef RANDGP_H
#define RANDGP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RandgpStatus {
  RANDGP_STATUS_OK = 0,
  RANDGP_STATUS_NULL_POINTER = 1,
  RANDGP_STATUS_INVALID_ARGUMENT = 2,
  RANDGP_STATUS_OUT_OF_BOX = 3,
  RANDGP_STATUS_ORDER_MISMATCH = 4,
  RANDGP_STATUS_CAPACITY = 5,
  RANDGP_STATUS_PARSE = 6,
  RANDGP_STATUS_IO = 7,
  RANDGP_STATUS_PANIC = 8,
} RandgpStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct RandgpConfig RandgpConfig;

/**
 * Opaque sparse density matrix.
 */
typedef struct RandgpMatrix RandgpMatrix;

/**
 * Library version as a static NUL-terminated string.
 */
const char *randgp_version(void);

/**
 * Message of the last failed call on this thread; valid until the next failure.
 */
const char *randgp_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RandgpStatus randgp_matrix_new(size_t order,
                                    size_t d,
                                    uint32_t cutoff,
                                    struct RandgpMatrix **out);

/**
 * # Safety
 * `m` must come from this library and not be freed twice. Null is ignored.
 */
void randgp_matrix_free(struct RandgpMatrix *m);

/**
 * # Safety
 * `m` valid; `coords` points to `len` integers.
 */
enum RandgpStatus randgp_matrix_set(struct RandgpMatrix *m,
                                    const int32_t *coords,
                                    size_t len,
                                    double re,
                                    double im);

/**
 * # Safety
 * `m` valid; `coords` points to `len` integers; `re`, `im` writable.
 */
enum RandgpStatus randgp_matrix_get(const struct RandgpMatrix *m,
                                    const int32_t *coords,
                                    size_t len,
                                    double *re,
                                    double *im);

/**
 * Number of stored coefficients.
 *
 * # Safety
 * `m` valid, `out` writable.
 */
enum RandgpStatus randgp_matrix_len(const struct RandgpMatrix *m, size_t *out);

/**
 * ‖S^(α) γ‖_{L²}.
 *
 * # Safety
 * `m` valid, `out` writable.
 */
enum RandgpStatus randgp_matrix_norm(const struct RandgpMatrix *m, double alpha, double *out);

/**
 * U(t)γ as a new matrix.
 *
 * # Safety
 * `m` valid, `out` writable.
 */
enum RandgpStatus randgp_free_evolve(const struct RandgpMatrix *m,
                                     double t,
                                     struct RandgpMatrix **out);

/**
 * B^±_{j,k} γ; `plus` selects the sign.
 *
 * # Safety
 * `m` valid, `out` writable.
 */
enum RandgpStatus randgp_collide(const struct RandgpMatrix *m,
                                 size_t j,
                                 size_t k,
                                 bool plus,
                                 struct RandgpMatrix **out);

/**
 * [B^±_{j,k}]^ω γ with the hashed sign field of `seed`.
 *
 * # Safety
 * `m` valid, `out` writable.
 */
enum RandgpStatus randgp_randomized_collide(const struct RandgpMatrix *m,
                                            size_t j,
                                            size_t k,
                                            bool plus,
                                            uint64_t seed,
                                            struct RandgpMatrix **out);

/**
 * E_ω ‖S^(α) [B_{j,m}]^ω γ‖² for m the order of γ; `enumerate` selects the
 * 2^M oracle instead of the exact rule.
 *
 * # Safety
 * `m` valid, `out` writable.
 */
enum RandgpStatus randgp_pair_sq_norm(const struct RandgpMatrix *m,
                                      size_t j,
                                      double alpha,
                                      bool enumerate,
                                      double *out);

/**
 * Parse a `key = value` configuration for the named experiment.
 *
 * # Safety
 * `experiment` and `text` are NUL-terminated (text may be null); `out` writable.
 */
enum RandgpStatus randgp_config_new(const char *experiment,
                                    const char *text,
                                    struct RandgpConfig **out);

/**
 * # Safety
 * `cfg` valid; `key`, `value` NUL-terminated.
 */
enum RandgpStatus randgp_config_set(struct RandgpConfig *cfg, const char *key, const char *value);

/**
 * # Safety
 * `cfg` from this library, not freed twice. Null is ignored.
 */
void randgp_config_free(struct RandgpConfig *cfg);

/**
 * Run the experiment, write its CSV/JSON under `out_dir` (null: the
 * configured directory) and report whether its check passed.
 *
 * # Safety
 * `cfg` valid; `out_dir` null or NUL-terminated; `passed` writable.
 */
enum RandgpStatus randgp_run(const struct RandgpConfig *cfg, const char *out_dir, bool *passed);

#endif  /* RANDGP_H */
