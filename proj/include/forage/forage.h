/* C interface to the forage library. All handles are opaque. Functions that
 * can fail return a forage_status; the message for the most recent failure on
 * the calling thread is available from forage_last_error(). Strings returned
 * through char** out-parameters are owned by the caller and released with
 * forage_string_free(). */
#ifndef FORAGE_FORAGE_H
#define FORAGE_FORAGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FORAGE_BUILDING_LIBRARY)
#define FORAGE_API __attribute__((visibility("default")))
#else
#define FORAGE_API
#endif

typedef enum forage_status {
  FORAGE_OK = 0,
  FORAGE_E_INVALID_ARGUMENT = 1,
  FORAGE_E_PARSE = 2,
  FORAGE_E_STRUCTURE = 3,
  FORAGE_E_LOOKUP = 4,
  FORAGE_E_CONTRACT = 5,
  FORAGE_E_GENERATION = 6,
  FORAGE_E_NUMERICAL = 7,
  FORAGE_E_PROTOCOL = 8,
  FORAGE_E_IO = 9,
  FORAGE_E_INTERNAL = 100
} forage_status;

typedef struct forage_corpus forage_corpus;
typedef struct forage_tasks forage_tasks;
typedef struct forage_params forage_params;

FORAGE_API const char* forage_version(void);
FORAGE_API const char* forage_status_name(forage_status status);
FORAGE_API const char* forage_last_error(void);
FORAGE_API void forage_string_free(char* s);

typedef struct forage_env_options {
  double alpha;
  double beta;
  size_t top_k;
  size_t max_steps;
  int f1_outcome; /* nonzero: token F1 instead of exact match */
} forage_env_options;

FORAGE_API void forage_env_options_init(forage_env_options* opts);

typedef struct forage_gen_options {
  size_t n_tasks;
  size_t hops;
  size_t distractors_per_task;
  size_t n_entities; /* 0 picks a size from the other counts */
  size_t n_relations;
  uint64_t seed;
  int conjunctive;
} forage_gen_options;

FORAGE_API void forage_gen_options_init(forage_gen_options* opts);

/* Generates a dataset into out_dir (corpus.jsonl, tasks.jsonl) after checking
 * that every task passes hop verification and that the oracle solves it under
 * env. */
FORAGE_API forage_status forage_generate(const forage_gen_options* gen, const forage_env_options* env,
                                         const char* out_dir);

FORAGE_API forage_status forage_corpus_load(const char* path, forage_corpus** out);
FORAGE_API void forage_corpus_free(forage_corpus* corpus);
FORAGE_API size_t forage_corpus_size(const forage_corpus* corpus);
/* JSON array of {doc_id, score}, best first. */
FORAGE_API forage_status forage_corpus_retrieve(const forage_corpus* corpus, const char* query, size_t k,
                                                char** out_json);

FORAGE_API forage_status forage_tasks_load(const char* path, forage_tasks** out);
FORAGE_API void forage_tasks_free(forage_tasks* tasks);
FORAGE_API size_t forage_tasks_size(const forage_tasks* tasks);

FORAGE_API forage_status forage_params_load(const char* path, forage_params** out);
FORAGE_API forage_status forage_params_save(const forage_params* params, const char* path);
FORAGE_API void forage_params_free(forage_params* params);

typedef struct forage_train_options {
  forage_env_options env;
  size_t iters;
  size_t episodes_per_iter;
  size_t bc_episodes;
  size_t bc_steps;
  size_t heldout;
  int warm_start;
  int shaped_reward;
  double lr_policy;
  double lr_value;
  double lr_bc;
  double gamma;
  double lam;
  double clip_eps;
  double value_coef;
  double entropy_coef;
  uint64_t seed;
} forage_train_options;

FORAGE_API void forage_train_options_init(forage_train_options* opts);

/* Trains on tasks (the trailing `heldout` tasks are held out). out_report_csv
 * may be NULL. */
FORAGE_API forage_status forage_train(const forage_tasks* tasks, const forage_corpus* corpus,
                                      const forage_train_options* opts, forage_params** out_params,
                                      char** out_report_csv);

typedef enum forage_policy_kind {
  FORAGE_POLICY_ORACLE = 0,
  FORAGE_POLICY_RAG = 1,
  FORAGE_POLICY_RANDOM = 2,
  FORAGE_POLICY_PARAMS = 3,   /* greedy over `params` */
  FORAGE_POLICY_EXTERNAL = 4, /* `target` is a shell command */
  FORAGE_POLICY_TCP = 5       /* `target` is host:port */
} forage_policy_kind;

typedef struct forage_policy_spec {
  forage_policy_kind kind;
  const forage_params* params;
  const char* target;
  uint64_t seed;
  int timeout_ms;
} forage_policy_spec;

FORAGE_API void forage_policy_spec_init(forage_policy_spec* spec);

/* format: "table" or "csv". */
FORAGE_API forage_status forage_eval(const forage_tasks* tasks, const forage_corpus* corpus,
                                     const forage_env_options* env, const forage_policy_spec* policy,
                                     const char* format, char** out_report);

/* One JSON line per episode: the episode log plus its blocks and loss-mask
 * spans. task_id NULL runs every task. */
FORAGE_API forage_status forage_rollout(const forage_tasks* tasks, const forage_corpus* corpus,
                                        const forage_env_options* env, const forage_policy_spec* policy,
                                        const char* task_id, char** out_jsonl);

/* Pretty-prints rollout lines, trajectory records, or raw tagged text. */
FORAGE_API forage_status forage_inspect(const char* input, char** out_text);

#ifdef __cplusplus
}
#endif

#endif
