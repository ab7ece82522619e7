#ifndef DEPTHPOCS_H
#define DEPTHPOCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DP_VIEW_LEFT 0

#define DP_VIEW_RIGHT 1

/**
 * Result of every fallible call. Values 2–4 match the CLI exit codes.
 */
typedef enum DpStatus {
  DP_STATUS_OK = 0,
  /**
   * Null pointer, bad length or otherwise malformed argument.
   */
  DP_STATUS_INVALID_ARGUMENT = 1,
  DP_STATUS_INVALID_CONFIG = 2,
  DP_STATUS_IO = 3,
  DP_STATUS_NUMERICAL = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  DP_STATUS_INTERNAL = 5,
} DpStatus;

typedef struct DpCameraPair DpCameraPair;

typedef struct DpDepthMap DpDepthMap;

typedef struct DpDescription DpDescription;

typedef struct DpRefineResult DpRefineResult;

/**
 * Solver settings; obtain defaults from [`dp_refine_options_default`].
 */
typedef struct DpRefineOptions {
  uint32_t max_iters;
  double eps;
  double tau;
  double sigma_s;
  double sigma_r;
  /**
   * 0 disables the bilateral filter.
   */
  uint32_t radius;
  double depth_scale;
  /**
   * `DP_VIEW_RIGHT` warps left→right first.
   */
  uint32_t first_target;
} DpRefineOptions;

typedef struct DpQuality {
  double psnr_left;
  double psnr_right;
  double g;
} DpQuality;

typedef struct DpHalfStep {
  uint32_t iter;
  uint32_t view;
  double mean_change;
  double clip_fraction;
  /**
   * False when the refinement ran without ground truth; `quality` is then zeroed.
   */
  bool has_quality;
  struct DpQuality quality;
} DpHalfStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dp_last_error_message(void);

void dp_clear_error(void);

/**
 * Copies `width·height` row-major samples into a new map.
 *
 * # Safety
 * `samples` must point to `width·height` readable doubles.
 */
enum DpStatus dp_map_new(size_t width,
                         size_t height,
                         const double *samples,
                         struct DpDepthMap **out);

/**
 * # Safety
 * `map` must be null or a handle from this library, not yet freed.
 */
void dp_map_free(struct DpDepthMap *map);

/**
 * # Safety
 * `map` must be a live handle; `width` and `height` must be writable.
 */
enum DpStatus dp_map_dims(const struct DpDepthMap *map, size_t *width, size_t *height);

/**
 * Copies the samples out; `len` must equal `width·height`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum DpStatus dp_map_copy_samples(const struct DpDepthMap *map, double *out, size_t len);

/**
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum DpStatus dp_pgm_read(const char *path, struct DpDepthMap **out);

/**
 * Writes an 8-bit PGM, or a 16-bit one storing levels × 256.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `map` a live handle.
 */
enum DpStatus dp_pgm_write(const char *path, const struct DpDepthMap *map, bool sixteen_bit);

/**
 * Quantizes with the same step for all 64 coefficients.
 *
 * # Safety
 * `map` must be a live handle; `out` writable.
 */
enum DpStatus dp_encode_flat(const struct DpDepthMap *map, double step, struct DpDescription **out);

/**
 * Quantizes with the luminance table scaled to `quality` (1–100).
 *
 * # Safety
 * `map` must be a live handle; `out` writable.
 */
enum DpStatus dp_encode_quality(const struct DpDepthMap *map,
                                uint32_t quality,
                                struct DpDescription **out);

/**
 * # Safety
 * `desc` must be null or a live handle.
 */
void dp_description_free(struct DpDescription *desc);

/**
 * Standard decode: centroid reconstruction, cropped and clamped to [0, 255].
 *
 * # Safety
 * `desc` must be a live handle; `out` writable.
 */
enum DpStatus dp_decode(const struct DpDescription *desc, struct DpDepthMap **out);

/**
 * Serializes to the QDM1 container. With `buf` null only `needed` is set;
 * otherwise `cap` must be at least `needed`.
 *
 * # Safety
 * `buf`, when not null, must have `cap` writable bytes; `needed` writable.
 */
enum DpStatus dp_description_to_bytes(const struct DpDescription *desc,
                                      uint8_t *buf,
                                      size_t cap,
                                      size_t *needed);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes.
 */
enum DpStatus dp_description_from_bytes(const uint8_t *bytes,
                                        size_t len,
                                        struct DpDescription **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
enum DpStatus dp_description_read(const char *path, struct DpDescription **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `desc` a live handle.
 */
enum DpStatus dp_description_write(const char *path, const struct DpDescription *desc);

/**
 * Builds a rectified pair from row-major `K` (9 values) and `E` (12 values)
 * for each view.
 *
 * # Safety
 * Each matrix pointer must reference the stated number of doubles.
 */
enum DpStatus dp_camera_pair_new(const double *k_left,
                                 const double *e_left,
                                 const double *k_right,
                                 const double *e_right,
                                 struct DpCameraPair **out);

/**
 * Left camera at the origin, right camera `baseline` along +x, shared
 * focal length and principal point.
 *
 * # Safety
 * `out` must be writable.
 */
enum DpStatus dp_camera_pair_standard(double focal,
                                      double cx,
                                      double cy,
                                      double baseline,
                                      struct DpCameraPair **out);

/**
 * # Safety
 * `pair` must be null or a live handle.
 */
void dp_camera_pair_free(struct DpCameraPair *pair);

struct DpRefineOptions dp_refine_options_default(void);

/**
 * Jointly refines two descriptions. `options` may be null for defaults.
 * Pass both truth maps to get per-half-step quality in the trace, or
 * neither.
 *
 * # Safety
 * All non-null pointers must be live handles; `out` writable.
 */
enum DpStatus dp_refine(const struct DpDescription *left,
                        const struct DpDescription *right,
                        const struct DpCameraPair *cameras,
                        const struct DpRefineOptions *options,
                        const struct DpDepthMap *truth_left,
                        const struct DpDepthMap *truth_right,
                        struct DpRefineResult **out);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
void dp_refine_result_free(struct DpRefineResult *result);

/**
 * New map handle holding a copy of the refined view.
 *
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum DpStatus dp_refine_result_map(const struct DpRefineResult *result,
                                   uint32_t view,
                                   struct DpDepthMap **out);

/**
 * # Safety
 * `result` must be a live handle; the output pointers writable.
 */
enum DpStatus dp_refine_result_summary(const struct DpRefineResult *result,
                                       uint32_t *iterations,
                                       bool *converged,
                                       size_t *half_steps);

/**
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum DpStatus dp_refine_result_step(const struct DpRefineResult *result,
                                    size_t index,
                                    struct DpHalfStep *out);

/**
 * PSNR in dB with peak 255; identical maps give +infinity.
 *
 * # Safety
 * `a`, `b` must be live handles; `out` writable.
 */
enum DpStatus dp_psnr(const struct DpDepthMap *a, const struct DpDepthMap *b, double *out);

/**
 * Per-view PSNR against the references and their mean.
 *
 * # Safety
 * All maps must be live handles; `out` writable.
 */
enum DpStatus dp_quality_g(const struct DpDepthMap *left,
                           const struct DpDepthMap *right,
                           const struct DpDepthMap *ref_left,
                           const struct DpDepthMap *ref_right,
                           struct DpQuality *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEPTHPOCS_H */
