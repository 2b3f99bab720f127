/* C interface to the SLAN library. All handles are opaque; every function
 * returns a status code and records a message retrievable with
 * slan_last_error() on the calling thread. */
#ifndef SLAN_SLAN_H
#define SLAN_SLAN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slan_status {
  SLAN_OK = 0,
  SLAN_INVALID_ARGUMENT = 1,
  SLAN_NOT_FOUND = 2,
  SLAN_IO = 3,
  SLAN_PARSE = 4,
  SLAN_NUMERIC = 5,
  SLAN_STATE = 6,
  SLAN_INTERNAL = 7
} slan_status;

typedef struct slan_options slan_options;
typedef struct slan_dataset slan_dataset;
typedef struct slan_model slan_model;

typedef enum slan_split { SLAN_TRAIN = 0, SLAN_VAL = 1, SLAN_TEST = 2 } slan_split;

/* Message of the last failed call on this thread ("" if none). */
const char* slan_last_error(void);
const char* slan_version(void);

/* Run options: keys are the CLI flag names without leading dashes. */
slan_status slan_options_create(slan_options** out);
void slan_options_destroy(slan_options* opts);
slan_status slan_options_set(slan_options* opts, const char* key, const char* value);

/* Runs a CLI command ("generate", "train", "eval", "ablate-agg", ...). */
slan_status slan_run(const char* command, const slan_options* opts);

/* Loads a split directory and applies imputation ("none", "ffill", "mean",
 * "interpolation") and train-statistics standardization. */
slan_status slan_dataset_load(const char* dir, const char* impute, slan_dataset** out);
void slan_dataset_destroy(slan_dataset* ds);
slan_status slan_dataset_size(const slan_dataset* ds, slan_split split, size_t* out);
slan_status slan_dataset_labels(const slan_dataset* ds, slan_split split, int* labels,
                                size_t capacity);

slan_status slan_model_load(const char* checkpoint, slan_model** out);
void slan_model_destroy(slan_model* model);
/* Sensor count, hidden size and trainable parameter count. */
slan_status slan_model_info(const slan_model* model, size_t* sensors, size_t* hidden,
                            size_t* parameters);
/* Writes P(label = 1) for each instance of the split into scores[capacity]. */
slan_status slan_model_predict(const slan_model* model, const slan_dataset* ds, slan_split split,
                               double* scores, size_t capacity);

slan_status slan_metrics(const double* scores, const int* labels, size_t n, double* auroc,
                         double* auprc);

#ifdef __cplusplus
}
#endif

#endif
