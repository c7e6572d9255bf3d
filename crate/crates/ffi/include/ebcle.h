#ifndef EBCLE_H
#define EBCLE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EbcleChannelMode {
  EBCLE_CHANNEL_MODE_FLATTEN_ALL = 0,
  EBCLE_CHANNEL_MODE_PER_CHANNEL_MEAN = 1,
} EbcleChannelMode;

typedef enum EbcleDirection {
  /**
   * Alternative: mean of `a` exceeds mean of `b`.
   */
  EBCLE_DIRECTION_A_GREATER = 0,
  EBCLE_DIRECTION_B_GREATER = 1,
} EbcleDirection;

typedef enum EbcleFamily {
  EBCLE_FAMILY_RESNET = 0,
  EBCLE_FAMILY_DENSENET = 1,
  EBCLE_FAMILY_RESNEXT = 2,
} EbcleFamily;

/**
 * Result code of every exported function.
 */
typedef enum EbcleStatus {
  EBCLE_STATUS_OK = 0,
  EBCLE_STATUS_NULL_POINTER = 1,
  EBCLE_STATUS_INVALID_ARGUMENT = 2,
  EBCLE_STATUS_IO = 3,
  EBCLE_STATUS_FORMAT = 4,
  EBCLE_STATUS_LENGTH = 5,
  EBCLE_STATUS_CONSISTENCY = 6,
  EBCLE_STATUS_SHAPE = 7,
  EBCLE_STATUS_DOMAIN = 8,
  EBCLE_STATUS_DEGENERATE = 9,
  EBCLE_STATUS_CONFIG = 10,
  EBCLE_STATUS_PARSE = 11,
  EBCLE_STATUS_TRAINING = 12,
  EBCLE_STATUS_PANIC = 13,
} EbcleStatus;

/**
 * Opaque image dataset.
 */
typedef struct EbcleDataset EbcleDataset;

typedef struct EbcleEntropySummary {
  size_t images;
  double mean_nats;
  double mean_rounded;
  double std_nats;
  double class_cv;
} EbcleEntropySummary;

typedef struct EbcleEstimate {
  double entropy_nats;
  double delta_e;
  uint32_t n_upper;
  uint32_t n_lower;
} EbcleEstimate;

typedef struct EbclePlan {
  uint32_t n_blocks;
  uint32_t depth;
  uint32_t depth_lower_bound;
  bool at_lower_bound;
} EbclePlan;

typedef struct EbcleArchConfig {
  enum EbcleFamily family;
  uint32_t depth;
  /**
   * Base width, growth rate or per-path width depending on the family.
   */
  uint32_t breadth;
  uint32_t height;
  uint32_t width;
  uint32_t channels;
  uint32_t classes;
  /**
   * ResNeXt only; 0 selects 8.
   */
  uint32_t cardinality;
  /**
   * DenseNet only; 0 selects 3.
   */
  uint32_t dense_blocks;
} EbcleArchConfig;

typedef struct EbcleTTest {
  double t_stat;
  uint32_t df;
  double p_one_tailed;
  bool reject_null;
} EbcleTTest;

typedef struct EbcleShapiroWilk {
  double w_stat;
  double p_value;
} EbcleShapiroWilk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` with a NUL
 * terminator and returns the buffer size it needs, including the NUL.
 * Returns 0 when there is no error. Passing a null `buf` only queries the
 * size.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t ebcle_last_error_message(char *buf, size_t len);

/**
 * Static description of a status code.
 */
const char *ebcle_status_str(enum EbcleStatus status);

/**
 * Loads an MNIST IDX image/label file pair.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be valid for writes.
 */
enum EbcleStatus ebcle_dataset_load_mnist(const char *images_path,
                                          const char *labels_path,
                                          struct EbcleDataset **out);

/**
 * Loads CIFAR binary batches; `label_bytes` is 1 (CIFAR-10) or 2 (CIFAR-100).
 *
 * # Safety
 * `paths` must hold `count` NUL-terminated strings; `out` must be valid for
 * writes.
 */
enum EbcleStatus ebcle_dataset_load_cifar(const char *const *paths,
                                          size_t count,
                                          uint32_t label_bytes,
                                          struct EbcleDataset **out);

/**
 * Loads a directory of class-named subdirectories of PGM/PPM files.
 *
 * # Safety
 * `dir` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum EbcleStatus ebcle_dataset_load_pnm(const char *dir, struct EbcleDataset **out);

/**
 * Releases a dataset. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle from this library not yet freed.
 */
void ebcle_dataset_free(struct EbcleDataset *ds);

/**
 * Image count, height, width, channels and class count of a dataset.
 * Any out pointer may be null.
 *
 * # Safety
 * `ds` must be a live handle; non-null out pointers must be valid for writes.
 */
enum EbcleStatus ebcle_dataset_info(const struct EbcleDataset *ds,
                                    size_t *images,
                                    size_t *height,
                                    size_t *width,
                                    size_t *channels,
                                    size_t *classes);

/**
 * Mean per-image entropy of a dataset, in nats.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be valid for writes.
 */
enum EbcleStatus ebcle_dataset_entropy(const struct EbcleDataset *ds,
                                       enum EbcleChannelMode mode,
                                       struct EbcleEntropySummary *out);

/**
 * Entropy of one interleaved (row, column, channel) 8-bit image.
 *
 * # Safety
 * `pixels` must hold `height·width·channels` bytes; `out` must be valid for
 * writes.
 */
enum EbcleStatus ebcle_image_entropy(const uint8_t *pixels,
                                     size_t height,
                                     size_t width,
                                     size_t channels,
                                     enum EbcleChannelMode mode,
                                     double *out);

/**
 * Block-count estimate from a dataset entropy in nats.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EbcleStatus ebcle_estimate(double entropy_nats, struct EbcleEstimate *out);

/**
 * Planned depth for a family from a dataset entropy in nats.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EbcleStatus ebcle_plan(double entropy_nats,
                            enum EbcleFamily family,
                            bool use_upper,
                            struct EbclePlan *out);

/**
 * Trainable parameter count of a family configuration.
 *
 * # Safety
 * `config` must point to a valid configuration; `out` must be valid for
 * writes.
 */
enum EbcleStatus ebcle_count_params(const struct EbcleArchConfig *config, uint64_t *out);

/**
 * One-tailed paired t-test on `a − b`.
 *
 * # Safety
 * `a` and `b` must each hold `n` values; `out` must be valid for writes.
 */
enum EbcleStatus ebcle_paired_t_test(const double *a,
                                     const double *b,
                                     size_t n,
                                     enum EbcleDirection direction,
                                     struct EbcleTTest *out);

/**
 * Shapiro-Wilk normality test.
 *
 * # Safety
 * `x` must hold `n` values; `out` must be valid for writes.
 */
enum EbcleStatus ebcle_shapiro_wilk(const double *x, size_t n, struct EbcleShapiroWilk *out);

/**
 * Largest generalization gap allowed by the input compression bound for
 * `n` samples at confidence `1 − delta`, with `i_tx` in bits.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EbcleStatus ebcle_compression_bound(double i_tx, double delta, uint64_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EBCLE_H */
