#ifndef BANDNET_H
#define BANDNET_H

/* Generated by cbindgen from bandnet-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum BnStatus {
  BN_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  BN_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument value violates a precondition.
   */
  BN_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The operating system reported an I/O failure.
   */
  BN_STATUS_IO = 3,
  /**
   * A file is not in the expected format or is internally inconsistent.
   */
  BN_STATUS_FORMAT = 4,
  /**
   * The data is unusable (wrong class balance, non-finite values, ...).
   */
  BN_STATUS_DATA = 5,
  /**
   * A string argument is not valid UTF-8.
   */
  BN_STATUS_UTF8 = 6,
  /**
   * An internal invariant failed; the library state is still sound.
   */
  BN_STATUS_PANIC = 7,
} BnStatus;

/**
 * Opaque handle to a segmentation mask
 * (labels: 0 non-water, 1 water, 255 invalid).
 */
typedef struct BnMask BnMask;

/**
 * Opaque handle to trained segmentation-network weights.
 */
typedef struct BnModel BnModel;

/**
 * Opaque handle to a loaded scene.
 */
typedef struct BnScene BnScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bn_version(void);

/**
 * Copies the current thread's last error message into `buf` (truncated to
 * `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
 * full message length in bytes, excluding the NUL. Call with NULL / 0 to
 * size the buffer first.
 *
 * # Safety
 * `buf` must be NULL or valid for `cap` bytes of writes.
 */
size_t bn_last_error_message(char *buf, size_t cap);

/**
 * Loads a scene directory (`scene.json` plus raw band files) into a new
 * handle stored in `*out`.
 *
 * # Safety
 * `dir` must be a NUL-terminated path; `out` must be valid for one write.
 */
enum BnStatus bn_scene_load(const char *dir, struct BnScene **out);

/**
 * Frees a scene handle. NULL is a no-op.
 *
 * # Safety
 * `scene` must be NULL or a pointer from [`bn_scene_load`], freed once.
 */
void bn_scene_free(struct BnScene *scene);

/**
 * Scene width in pixels; 0 on NULL.
 *
 * # Safety
 * `scene` must be NULL or a live scene handle.
 */
size_t bn_scene_width(const struct BnScene *scene);

/**
 * Scene height in pixels; 0 on NULL.
 *
 * # Safety
 * `scene` must be NULL or a live scene handle.
 */
size_t bn_scene_height(const struct BnScene *scene);

/**
 * Number of reflectance bands in the scene; 0 on NULL.
 *
 * # Safety
 * `scene` must be NULL or a live scene handle.
 */
size_t bn_scene_band_count(const struct BnScene *scene);

/**
 * Whether the scene carries the named band (e.g. "B11"); false on NULL or
 * an unknown name.
 *
 * # Safety
 * `scene` must be NULL or a live scene handle; `band` NULL or a
 * NUL-terminated string.
 */
bool bn_scene_has_band(const struct BnScene *scene, const char *band);

/**
 * Loads trained network weights from a weight file into `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated path; `out` must be valid for one write.
 */
enum BnStatus bn_model_load(const char *path, struct BnModel **out);

/**
 * Frees a model handle. NULL is a no-op.
 *
 * # Safety
 * `model` must be NULL or a pointer from [`bn_model_load`], freed once.
 */
void bn_model_free(struct BnModel *model);

/**
 * Number of input bands the model expects; 0 on NULL.
 *
 * # Safety
 * `model` must be NULL or a live model handle.
 */
size_t bn_model_input_dim(const struct BnModel *model);

/**
 * Segments `scene` with `model`. `bands` names the model's input bands in
 * training order (`n_bands` strings such as "B11"); pixels whose water
 * probability reaches `threshold` become water, scene-classification
 * no-data pixels become invalid. The new mask handle lands in `*out`.
 *
 * # Safety
 * All handles must be live; `bands` must point to `n_bands` NUL-terminated
 * strings; `out` must be valid for one write.
 */
enum BnStatus bn_predict_map(const struct BnModel *model,
                             const struct BnScene *scene,
                             const char *const *bands,
                             size_t n_bands,
                             double threshold,
                             struct BnMask **out);

/**
 * Frees a mask handle. NULL is a no-op.
 *
 * # Safety
 * `mask` must be NULL or a mask pointer from this library, freed once.
 */
void bn_mask_free(struct BnMask *mask);

/**
 * Mask width in pixels; 0 on NULL.
 *
 * # Safety
 * `mask` must be NULL or a live mask handle.
 */
size_t bn_mask_width(const struct BnMask *mask);

/**
 * Mask height in pixels; 0 on NULL.
 *
 * # Safety
 * `mask` must be NULL or a live mask handle.
 */
size_t bn_mask_height(const struct BnMask *mask);

/**
 * Row-major per-pixel labels (0 non-water, 1 water, 255 invalid), one byte
 * per pixel, valid until the mask is freed. NULL on NULL input.
 *
 * # Safety
 * `mask` must be NULL or a live mask handle.
 */
const uint8_t *bn_mask_data(const struct BnMask *mask);

/**
 * Number of water pixels; 0 on NULL.
 *
 * # Safety
 * `mask` must be NULL or a live mask handle.
 */
size_t bn_mask_count_water(const struct BnMask *mask);

/**
 * Change map between two masks of the same extent: water where exactly one
 * input is water, invalid where either is invalid. The new handle lands in
 * `*out`.
 *
 * # Safety
 * `a` and `b` must be live mask handles; `out` valid for one write.
 */
enum BnStatus bn_mask_xor(const struct BnMask *a, const struct BnMask *b, struct BnMask **out);

/**
 * Writes the mask as a binary PGM file (water 255, non-water 0,
 * invalid 128).
 *
 * # Safety
 * `mask` must be a live mask handle; `path` a NUL-terminated path.
 */
enum BnStatus bn_mask_save_pgm(const struct BnMask *mask, const char *path);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BANDNET_H */
