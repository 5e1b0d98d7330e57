/* promptloom C API — retrieval-based in-context prompt editing.
 *
 * The library is consumed through opaque handles and status codes. Every
 * function that can fail returns promptloom_status; on failure a
 * thread-local message is available via promptloom_last_error(). Strings
 * returned through char** out-parameters are heap-allocated and must be
 * released with promptloom_string_free(). Handles are released with their
 * matching *_free() function; all *_free functions accept NULL.
 */
#ifndef PROMPTLOOM_H
#define PROMPTLOOM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PROMPTLOOM_API __declspec(dllexport)
#else
#define PROMPTLOOM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum promptloom_status {
  PROMPTLOOM_OK = 0,
  PROMPTLOOM_ERR_IO = 1,
  PROMPTLOOM_ERR_PARSE = 2,
  PROMPTLOOM_ERR_INVALID = 3,
  PROMPTLOOM_ERR_NETWORK = 4,
  PROMPTLOOM_ERR_INTERNAL = 5
} promptloom_status;

PROMPTLOOM_API const char* promptloom_version(void);
PROMPTLOOM_API const char* promptloom_status_name(promptloom_status status);

/* Message describing the most recent failure on this thread. Valid until the
 * next failing call on the same thread. */
PROMPTLOOM_API const char* promptloom_last_error(void);

PROMPTLOOM_API void promptloom_string_free(char* s);

/* ---- configuration ----------------------------------------------------- */

typedef struct promptloom_config promptloom_config;

PROMPTLOOM_API promptloom_config* promptloom_config_new(void);
PROMPTLOOM_API promptloom_status promptloom_config_load(const char* path,
                                                        promptloom_config** out);
PROMPTLOOM_API promptloom_status promptloom_config_save(const promptloom_config* config,
                                                        const char* path);
/* Dotted keys, e.g. "dedup.threshold"; values use the config-file lexical
 * forms (strings may be unquoted). */
PROMPTLOOM_API promptloom_status promptloom_config_set(promptloom_config* config,
                                                       const char* key,
                                                       const char* value);
PROMPTLOOM_API promptloom_status promptloom_config_get(const promptloom_config* config,
                                                       const char* key, char** out);
PROMPTLOOM_API void promptloom_config_free(promptloom_config* config);

/* ---- corpus ------------------------------------------------------------ */

typedef struct promptloom_corpus promptloom_corpus;

/* Ingest raw JSONL prompt files (required "text", optional "id"/"meta").
 * Either path may be NULL; at least one is required. */
PROMPTLOOM_API promptloom_status promptloom_corpus_ingest(const char* train_jsonl_path,
                                                          const char* user_jsonl_path,
                                                          promptloom_corpus** out);
PROMPTLOOM_API promptloom_status promptloom_corpus_load(const char* path,
                                                        promptloom_corpus** out);
PROMPTLOOM_API promptloom_status promptloom_corpus_save(const promptloom_corpus* corpus,
                                                        const char* path);
PROMPTLOOM_API size_t promptloom_corpus_size(const promptloom_corpus* corpus);
PROMPTLOOM_API size_t promptloom_corpus_train_count(const promptloom_corpus* corpus);
PROMPTLOOM_API size_t promptloom_corpus_user_count(const promptloom_corpus* corpus);
PROMPTLOOM_API void promptloom_corpus_free(promptloom_corpus* corpus);

/* ---- de-duplication ---------------------------------------------------- */

/* Removes near-duplicate train prompts (MinHash + LSH at the configured
 * threshold). kept_out receives the surviving corpus; report_json_out (may
 * be NULL) receives {"kept_ids":[...],"removed":[...]} JSON. */
PROMPTLOOM_API promptloom_status promptloom_dedup(const promptloom_corpus* corpus,
                                                  const promptloom_config* config,
                                                  promptloom_corpus** kept_out,
                                                  char** report_json_out);

/* ---- embeddings --------------------------------------------------------- */

typedef struct promptloom_embeddings promptloom_embeddings;

/* Text format: "EMB1 <dim> <count>" header then "<id>\t<f32 ...>" rows. */
PROMPTLOOM_API promptloom_status promptloom_embeddings_load(const char* path,
                                                            size_t expected_dim,
                                                            promptloom_embeddings** out);
PROMPTLOOM_API promptloom_status promptloom_embeddings_save(
    const promptloom_embeddings* table, const char* path);
/* Deterministic hashed-projection fallback covering every corpus prompt. */
PROMPTLOOM_API promptloom_status promptloom_embeddings_hash_for_corpus(
    const promptloom_corpus* corpus, const promptloom_config* config,
    promptloom_embeddings** out);
PROMPTLOOM_API size_t promptloom_embeddings_dim(const promptloom_embeddings* table);
PROMPTLOOM_API size_t promptloom_embeddings_size(const promptloom_embeddings* table);
PROMPTLOOM_API void promptloom_embeddings_free(promptloom_embeddings* table);

/* ---- cluster index ------------------------------------------------------ */

typedef struct promptloom_index promptloom_index;

/* K-means over the train-prompt embeddings (k = 0 selects ceil(sqrt(N))). */
PROMPTLOOM_API promptloom_status promptloom_index_fit(
    const promptloom_embeddings* table, const promptloom_corpus* corpus,
    const promptloom_config* config, promptloom_index** out);
PROMPTLOOM_API promptloom_status promptloom_index_save(const promptloom_index* index,
                                                       const char* path);
PROMPTLOOM_API promptloom_status promptloom_index_load(const char* path,
                                                       promptloom_index** out);
PROMPTLOOM_API size_t promptloom_index_k(const promptloom_index* index);
PROMPTLOOM_API void promptloom_index_free(promptloom_index* index);

/* ---- pipeline ----------------------------------------------------------- */

/* Runs retrieve → select → assemble → edit for one user prompt.
 * result_json_out receives a deterministic JSON object (rendered prompt,
 * edited text, exemplar ids, divergence before/after). timings_json_out
 * (may be NULL) receives per-stage wall-clock timings, which vary between
 * runs. dry_run != 0 skips the LLM call and returns the rendered prompt. */
PROMPTLOOM_API promptloom_status promptloom_edit(
    const promptloom_corpus* corpus, const promptloom_embeddings* table,
    const promptloom_index* index, const promptloom_config* config,
    const char* user_text, int dry_run, char** result_json_out,
    char** timings_json_out);

/* Strategy comparison table. strategies_csv is comma-separated (closest,
 * farthest, random, identity). external_scores_path may be NULL; when given
 * it must be a `strategy,clap,kl,fad,sub,obj` CSV. Writes the report CSV to
 * out_csv_path. warnings_out (may be NULL) receives newline-separated
 * warnings, empty string when none. */
PROMPTLOOM_API promptloom_status promptloom_report(
    const promptloom_corpus* corpus, const promptloom_embeddings* table,
    const promptloom_index* index, const promptloom_config* config,
    const char* strategies_csv, const char* external_scores_path,
    const char* out_csv_path, char** warnings_out);

/* Retrieval latency benchmark over synthetic tables. sizes_csv is
 * comma-separated entry counts. Writes `size,mean_latency_ms` CSV rows plus
 * slope/R² comment lines; summary_json_out (may be NULL) receives
 * {"slope_ms_per_entry":..,"r_squared":..,"rows":[[size,ms],..]}. */
PROMPTLOOM_API promptloom_status promptloom_bench(const char* sizes_csv, size_t top_m,
                                                  size_t trials,
                                                  const promptloom_config* config,
                                                  const char* out_csv_path,
                                                  char** summary_json_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PROMPTLOOM_H */
