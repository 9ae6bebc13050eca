/* Copyright 2026 The Lookback Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef LOOKBACK_LOOKBACK_H
#define LOOKBACK_LOOKBACK_H

/* C interface of the lookback shared library.
 *
 * Every function returns an lb_status. On failure the message of the last
 * error on the calling thread is available from lb_last_error(). Strings
 * returned through out-parameters are owned by the caller and released with
 * lb_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LOOKBACK_BUILDING)
#    define LB_API __declspec(dllexport)
#  else
#    define LB_API __declspec(dllimport)
#  endif
#else
#  define LB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lb_status {
    LB_OK = 0,
    LB_ERR_INVALID_ARGUMENT = 1,
    LB_ERR_IO = 2,
    LB_ERR_FORMAT = 3,
    LB_ERR_BACKEND_RETRYABLE = 4,
    LB_ERR_BACKEND_FATAL = 5,
    LB_ERR_INTERNAL = 6
} lb_status;

typedef struct lb_lm lb_lm;
typedef struct lb_record lb_record;

LB_API const char* lb_version(void);
/* Message of the last failure on this thread; "" after a success. */
LB_API const char* lb_last_error(void);
LB_API void lb_string_free(char* s);

/* ---- language models ---- */

typedef struct lb_ngram_params {
    uint32_t order;
    double add_k;
    const double* lambdas; /* `order` weights, or NULL for uniform */
} lb_ngram_params;

LB_API void lb_ngram_params_init(lb_ngram_params* params);

LB_API lb_status lb_lm_train_file(const char* corpus_path, const lb_ngram_params* params, lb_lm** out);
LB_API lb_status lb_lm_load(const char* model_path, lb_lm** out);
LB_API lb_status lb_lm_save(const lb_lm* lm, const char* model_path);
LB_API lb_status lb_lm_save_vocab(const lb_lm* lm, const char* vocab_path);
/* HTTP backend; the vocabulary file fixes the id space. */
LB_API lb_status lb_lm_remote(const char* endpoint, const char* vocab_path, uint32_t top_n, uint32_t timeout_ms,
                              uint32_t retries, lb_lm** out);
/* Backend described by the [backend] section of an experiment config; an
 * n-gram model is trained on the train corpus when its file is missing. */
LB_API lb_status lb_lm_from_config(const char* config_path, lb_lm** out);
LB_API lb_status lb_lm_vocab_size(const lb_lm* lm, size_t* out);
/* Writes vocab_size probabilities of the next token after `context`. */
LB_API lb_status lb_lm_next_dist(const lb_lm* lm, const uint32_t* context, size_t context_len, double* probs,
                                 size_t probs_len);
/* Whitespace tokenization against the model vocabulary. The caller frees
 * *ids with lb_ids_free. */
LB_API lb_status lb_lm_tokenize(const lb_lm* lm, const char* text, uint32_t** ids, size_t* len);
LB_API void lb_ids_free(uint32_t* ids);
LB_API void lb_lm_free(lb_lm* lm);

/* ---- decoding ---- */

typedef struct lb_decode_params {
    const char* algorithm; /* greedy|nucleus|typical|eta|contrastive|lookback */
    int32_t max_new_tokens;
    uint64_t seed;
    double top_p;
    double tau;
    double eta;
    int32_t k;     /* contrastive or look-back */
    double alpha;  /* contrastive or look-back */
    const char* mode; /* look-back: uniform|softmax */
    int32_t history_includes_prefix;
} lb_decode_params;

LB_API void lb_decode_params_init(lb_decode_params* params);

LB_API lb_status lb_decode(const lb_lm* lm, const char* prefix_text, const lb_decode_params* params, lb_record** out);
/* One JSON object (generation schema). */
LB_API lb_status lb_record_json(const lb_record* record, const lb_lm* lm, char** out);
LB_API lb_status lb_record_continuation(const lb_record* record, const lb_lm* lm, char** text);
LB_API lb_status lb_record_length(const lb_record* record, size_t* steps);
LB_API lb_status lb_record_alarms(const lb_record* record, size_t* alarms);
/* Rebuilds a record from one JSONL line; step distributions are recomputed
 * with `lm`. */
LB_API lb_status lb_record_from_json(const lb_lm* lm, const char* json, lb_record** out);
LB_API lb_status lb_record_export_diagnostics(const lb_record* record, const char* out_dir, int normalize);
LB_API void lb_record_free(lb_record* record);

/* ---- experiments ---- */

typedef struct lb_experiment_options {
    const char* config_path;
    const char* out_dir;      /* NULL keeps the configured value */
    int has_seed;
    uint64_t seed;
    int32_t workers;          /* <= 0 keeps the configured value */
    int32_t num_instances;    /* <= 0 keeps the configured value */
    int32_t max_new_tokens;   /* <= 0 keeps the configured value */
    int diagnostics;          /* < 0 keeps the configured value */
} lb_experiment_options;

LB_API void lb_experiment_options_init(lb_experiment_options* opts);

/* Writes metrics.csv and generations.jsonl; *metrics_csv may be NULL. */
LB_API lb_status lb_run_experiment(const lb_experiment_options* opts, char** metrics_csv);
/* Writes sweep.csv and sweep_selected.json; *summary_json may be NULL. */
LB_API lb_status lb_run_sweep(const lb_experiment_options* opts, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* LOOKBACK_LOOKBACK_H */
