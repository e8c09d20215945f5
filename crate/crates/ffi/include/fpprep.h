#ifndef FPPREP_H
#define FPPREP_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FPP_TECHNIQUE_BINS 0

#define FPP_TECHNIQUE_MULSHIFT 1

#define FPP_TECHNIQUE_EVENODD 2

#define FPP_TECHNIQUE_EVENNESS 3

#define FPP_TECHNIQUE_IDENTITY 4

typedef enum FppStatus {
  FPP_STATUS_OK = 0,
  FPP_STATUS_NULL_POINTER = 1,
  FPP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input contains NaN, infinity, a negative value or a subnormal.
   */
  FPP_STATUS_UNSUPPORTED = 3,
  /**
   * The requested `d` cannot be reached with these parameters.
   */
  FPP_STATUS_CAPACITY = 4,
  FPP_STATUS_NON_CONVERGENCE = 5,
  /**
   * Corrupt container or archive.
   */
  FPP_STATUS_INTEGRITY = 6,
  /**
   * Output buffer too small; the required length was written.
   */
  FPP_STATUS_BUFFER_TOO_SMALL = 7,
  FPP_STATUS_INTERNAL = 8,
} FppStatus;

/**
 * Opaque transformed dataset.
 */
typedef struct FppDataset FppDataset;

/**
 * Library-owned bytes.
 */
typedef struct FppBytes {
  uint8_t *data;
  size_t len;
} FppBytes;

typedef struct FppSharedBits {
  uint32_t s_sign;
  uint32_t s_e;
  uint32_t s_m;
  uint32_t s_tot;
} FppSharedBits;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into the library on the same thread.
 */
const char *fpp_last_error_message(void);

/**
 * Transforms `n` values. `k` is only read for the bins technique.
 *
 * # Safety
 * `values` must point to `n` readable doubles and `out` to writable storage
 * for one pointer.
 */
enum FppStatus fpp_forward(const double *values,
                           size_t n,
                           uint8_t technique,
                           uint32_t d,
                           size_t k,
                           struct FppDataset **out);

/**
 * # Safety
 * `dataset` must be NULL or a handle from this library not yet freed.
 */
void fpp_dataset_free(struct FppDataset *dataset);

/**
 * Length of the original dataset, or 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t fpp_dataset_len(const struct FppDataset *dataset);

/**
 * Technique id actually applied; constant inputs report the identity id.
 *
 * # Safety
 * `dataset` must be a live handle.
 */
enum FppStatus fpp_dataset_technique(const struct FppDataset *dataset, uint8_t *out);

/**
 * Bytes of metadata the container stores for this dataset.
 *
 * # Safety
 * `dataset` must be a live handle and `out` writable.
 */
enum FppStatus fpp_metadata_size(const struct FppDataset *dataset, size_t *out);

/**
 * Serializes a dataset. Release `out` with [`fpp_bytes_free`].
 *
 * # Safety
 * `dataset` must be a live handle and `out` writable.
 */
enum FppStatus fpp_encode(const struct FppDataset *dataset, struct FppBytes *out);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes and `out` to writable storage
 * for one pointer.
 */
enum FppStatus fpp_decode(const uint8_t *bytes, size_t len, struct FppDataset **out);

/**
 * Restores the original values into `out`. `out_len` receives the number of
 * values, also when the buffer is too small.
 *
 * # Safety
 * `dataset` must be a live handle, `out` writable for `capacity` doubles and
 * `out_len` writable.
 */
enum FppStatus fpp_inverse(const struct FppDataset *dataset,
                           double *out,
                           size_t capacity,
                           size_t *out_len);

/**
 * Shared-bit archive of `n` values. Release `out` with [`fpp_bytes_free`].
 *
 * # Safety
 * `values` must point to `n` readable doubles and `out` must be writable.
 */
enum FppStatus fpp_gd_compress(const double *values, size_t n, struct FppBytes *out);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes, `out` be writable for
 * `capacity` doubles and `out_len` writable.
 */
enum FppStatus fpp_gd_decompress(const uint8_t *bytes,
                                 size_t len,
                                 double *out,
                                 size_t capacity,
                                 size_t *out_len);

/**
 * # Safety
 * `values` must point to `n` readable doubles and `out` must be writable.
 */
enum FppStatus fpp_shared_bits(const double *values, size_t n, struct FppSharedBits *out);

/**
 * # Safety
 * `bytes` must come from this library and not have been freed.
 */
void fpp_bytes_free(struct FppBytes bytes);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPPREP_H */
