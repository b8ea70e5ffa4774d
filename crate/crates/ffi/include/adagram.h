#ifndef ADAGRAM_H
#define ADAGRAM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdgMetric {
  ADG_METRIC_ARI = 0,
  ADG_METRIC_V_MEASURE = 1,
  ADG_METRIC_PAIRED_FSCORE = 2,
} AdgMetric;

typedef enum AdgStatus {
  ADG_STATUS_OK = 0,
  ADG_STATUS_NULL_POINTER = 1,
  ADG_STATUS_INVALID_UTF8 = 2,
  ADG_STATUS_IO = 3,
  ADG_STATUS_CORRUPT_MODEL = 4,
  ADG_STATUS_OUT_OF_VOCABULARY = 5,
  ADG_STATUS_INVALID_ARGUMENT = 6,
  ADG_STATUS_BUFFER_TOO_SMALL = 7,
  ADG_STATUS_TRAINING_FAILED = 8,
  ADG_STATUS_PANIC = 9,
} AdgStatus;

// Opaque trained model.
typedef struct AdgModel AdgModel;

typedef struct AdgTrainConfig {
  size_t dim;
  size_t senses;
  double alpha;
  size_t window;
  uint64_t min_count;
  uint32_t epochs;
  size_t workers;
  uint64_t seed;
  double rho0;
  double lambda0;
  double min_rate;
} AdgTrainConfig;

typedef struct AdgNeighbor {
  uint32_t word_id;
  uint32_t sense;
  double cosine;
} AdgNeighbor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or an empty
// string. Valid until the next call into this library on the same thread.
const char *adg_last_error(void);

// Training defaults.
struct AdgTrainConfig adg_train_config_default(void);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum AdgStatus adg_model_load(const char *path, struct AdgModel **out);

// # Safety
// `corpus_path` must be a NUL-terminated string, `config` and `out` valid
// pointers.
enum AdgStatus adg_train_file(const char *corpus_path,
                              const struct AdgTrainConfig *config,
                              struct AdgModel **out);

// # Safety
// `model` must be null or a handle from this library not yet freed.
void adg_model_free(struct AdgModel *model);

// # Safety
// `model` must be a live handle and `path` a NUL-terminated string.
enum AdgStatus adg_model_save(const struct AdgModel *model, const char *path);

// Vocabulary size, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t adg_model_vocab_size(const struct AdgModel *model);

// # Safety
// `model` must be null or a live handle.
size_t adg_model_dim(const struct AdgModel *model);

// # Safety
// `model` must be null or a live handle.
size_t adg_model_senses(const struct AdgModel *model);

// # Safety
// `model` must be a live handle, `word` a NUL-terminated string and
// `out_id` valid.
enum AdgStatus adg_model_word_id(const struct AdgModel *model, const char *word, uint32_t *out_id);

// Copy the word with id `word_id` into `buf` as a NUL-terminated string.
// `out_len` receives the byte length without the terminator, also when the
// buffer is too small.
//
// # Safety
// `buf` must hold `cap` bytes; `out_len` must be valid.
enum AdgStatus adg_model_word(const struct AdgModel *model,
                              uint32_t word_id,
                              char *buf,
                              size_t cap,
                              size_t *out_len);

// Prior sense probabilities of a word; `out` must hold `senses` values.
//
// # Safety
// `out` must point to `out_len` writable doubles.
enum AdgStatus adg_model_prior(const struct AdgModel *model,
                               uint32_t word_id,
                               double *out,
                               size_t out_len);

// Sense posterior of `word_id` given context word ids.
//
// # Safety
// `context` must point to `context_len` ids; `out` to `out_len` doubles.
enum AdgStatus adg_model_disambiguate(const struct AdgModel *model,
                                      uint32_t word_id,
                                      const uint32_t *context,
                                      size_t context_len,
                                      double *out,
                                      size_t out_len);

// Copy the prototype of `(word_id, sense)`; `out` must hold `dim` floats.
//
// # Safety
// `out` must point to `out_len` writable floats.
enum AdgStatus adg_model_sense_vector(const struct AdgModel *model,
                                      uint32_t word_id,
                                      uint32_t sense,
                                      float *out,
                                      size_t out_len);

// Number of senses with prior probability above `epsilon`.
//
// # Safety
// `out` must be valid.
enum AdgStatus adg_model_sense_count(const struct AdgModel *model,
                                     uint32_t word_id,
                                     double epsilon,
                                     size_t *out);

// Up to `cap` nearest prototypes of other words; `out_len` receives the
// number written.
//
// # Safety
// `out` must point to `cap` neighbors; `out_len` must be valid.
enum AdgStatus adg_model_nearest(const struct AdgModel *model,
                                 uint32_t word_id,
                                 uint32_t sense,
                                 double epsilon,
                                 struct AdgNeighbor *out,
                                 size_t cap,
                                 size_t *out_len);

// Clustering agreement between two labelings of `n` items.
//
// # Safety
// `gold` and `pred` must point to `n` labels; `out` must be valid.
enum AdgStatus adg_cluster_score(enum AdgMetric metric,
                                 const uint32_t *gold,
                                 const uint32_t *pred,
                                 size_t n,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADAGRAM_H */
