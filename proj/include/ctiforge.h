/* cti-forge C API.
 *
 * Every function returns a cf_status. On failure the calling thread's last
 * error (message, kind, pipeline stage) describes what went wrong. Strings
 * returned through char** out-parameters are heap allocated and must be
 * released with cf_string_free. Structured results are JSON documents.
 */
#ifndef CTIFORGE_H
#define CTIFORGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CF_API __declspec(dllexport)
#else
#define CF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values 0-7 double as process exit codes. */
typedef enum cf_status {
  CF_OK = 0,
  CF_ERR_INTERNAL = 1,
  CF_ERR_VALIDATION = 2, /* bad request, argument, file or catalog */
  CF_ERR_NAME_TAKEN = 3,
  CF_ERR_FETCH = 4,
  CF_ERR_GENERATION = 5,
  CF_ERR_STORE = 6,
  CF_ERR_MONITOR_TIMEOUT = 7,
  CF_ERR_EVALUATION = 8
} cf_status;

typedef struct cf_catalog cf_catalog;
typedef struct cf_store cf_store;
typedef struct cf_engine cf_engine;

CF_API const char *cf_version(void);

/* Last error on this thread; empty strings after a success. */
CF_API const char *cf_last_error(void);
CF_API const char *cf_last_error_kind(void);  /* e.g. "NameTaken" */
CF_API const char *cf_last_error_stage(void); /* pipeline stage or "" */
CF_API int cf_exit_code(cf_status status);

CF_API void cf_string_free(char *s);

/* ---- indicators ------------------------------------------------------- */

CF_API cf_status cf_refang(const char *text, size_t len, char **out);
/* kind<TAB>value<TAB>defanged lines. */
CF_API cf_status cf_extract_iocs_tsv(const char *text, size_t len, char **out);
/* [{"kind","value","raw","begin","end","defanged","is_private"}...] */
CF_API cf_status cf_extract_iocs_json(const char *text, size_t len, char **out);

/* ---- ATT&CK catalog --------------------------------------------------- */

/* path NULL: the bundled catalog. */
CF_API cf_status cf_catalog_load(const char *path, cf_catalog **out);
CF_API void cf_catalog_free(cf_catalog *cat);
CF_API size_t cf_catalog_size(const cf_catalog *cat);
CF_API cf_status cf_catalog_version(const cf_catalog *cat, char **out);
/* {"id","name","tactics":[...],"parent_id","description"} */
CF_API cf_status cf_catalog_lookup(const cf_catalog *cat, const char *id, char **technique_json);
/* [{"technique_id","evidence","matched_by"}...] */
CF_API cf_status cf_extract_ttps_json(const cf_catalog *cat, const char *text, size_t len, char **out);
CF_API cf_status cf_render_mitre_table(const cf_catalog *cat, const char *text, size_t len, char **out);

/* ---- report store ----------------------------------------------------- */

/* kind: "journal" or "git". create != 0 makes the directory (and git
 * repository) when missing. */
CF_API cf_status cf_store_open(const char *kind, const char *path, int create, cf_store **out);
CF_API void cf_store_free(cf_store *store);
CF_API cf_status cf_store_exists(cf_store *store, const char *name, int *exists);
/* Commit JSON: {"id","parent","files","message","timestamp"}. */
CF_API cf_status cf_store_put(cf_store *store, const char *name, const char *content, size_t len,
                              const char *message, char **commit_json);
CF_API cf_status cf_store_read(cf_store *store, const char *name, char **content, size_t *len);
/* "null" for an empty store. */
CF_API cf_status cf_store_latest(cf_store *store, char **commit_json);
/* since_id may be NULL for the whole history; JSON array, oldest first. */
CF_API cf_status cf_store_list_since(cf_store *store, const char *since_id, char **commits_json);
CF_API cf_status cf_store_path_of(cf_store *store, const char *name, char **path);

/* Syntactic file-name check plus uniqueness against the store:
 * CF_ERR_VALIDATION or CF_ERR_NAME_TAKEN. */
CF_API cf_status cf_check_name(cf_store *store, const char *name);

typedef void (*cf_poll_fn)(int poll, void *user);
/* Polls immediately, then every interval_s. timeout_s <= 0 waits forever.
 * since_id NULL: baseline is the head at start, or the whole history when
 * from_start != 0. */
CF_API cf_status cf_monitor(cf_store *store, const char *name, double interval_s, double timeout_s,
                            const char *since_id, int from_start, cf_poll_fn on_poll, void *user,
                            char **commit_json, int *polls);

/* ---- generation engine ------------------------------------------------ */

/* config_json keys (all optional):
 *   store_kind, store_path, create_store, attack_catalog, data_dir,
 *   software_list, adversary_aliases,
 *   backend {kind: "rule"|"llm-http", base_url, model, temperature,
 *            api_key, timeout_s, scu_base_rate},
 *   limits {timeout_s, max_bytes, max_redirects},
 *   retry {max_attempts, initial_backoff_ms},
 *   generated_at (Unix seconds), parallel (bool) */
CF_API cf_status cf_engine_create(const char *config_json, cf_engine **out);
CF_API void cf_engine_free(cf_engine *engine);
/* Borrowed; valid while the engine lives. */
CF_API cf_store *cf_engine_store(cf_engine *engine);
CF_API const cf_catalog *cf_engine_catalog(cf_engine *engine);

typedef void (*cf_stage_fn)(const char *stage, double seconds, void *user);
CF_API void cf_engine_set_progress(cf_engine *engine, cf_stage_fn fn, void *user);

/* request_json: {"intelInfo","threatType","fileName"}. Validation only. */
CF_API cf_status cf_engine_validate(cf_engine *engine, const char *request_json);
/* Result JSON: {"file_name","title","report_path","commit":{...},
 * "sections":[{"ordinal","heading","backend","attempts"}],
 * "usages":[usage...], "timings":[{"stage","seconds"}], "iocs":n, "ttps":n} */
CF_API cf_status cf_engine_run(cf_engine *engine, const char *request_json, char **result_json);

/* ---- evaluation and cost ---------------------------------------------- */

/* Lowercase, bundled stopwords, raw term frequency. */
CF_API cf_status cf_text_cosine(const char *a, const char *b, double *out);
/* Deterministic hashed bag-of-words embedding similarity. */
CF_API cf_status cf_hashed_embed_similarity(const char *a, const char *b, uint64_t seed, double *out);

/* options_json (optional): {"adversary_aliases": path, "stopwords": path,
 *   "similarity_scope": [ordinals] (empty = whole document),
 *   "embedding": {"kind": "hashed", "seed": n} | {"kind": "http",
 *                 "base_url", "model", "api_key", "max_tokens"}}
 * Row JSON as emitted in the evaluate NDJSON stream. */
CF_API cf_status cf_compare_reports(const cf_catalog *cat, const char *report_name, const char *ai,
                                    const char *manual, const char *options_json, char **row_json);
/* rows_ndjson: one row JSON per line. */
CF_API cf_status cf_render_comparison_table(const char *rows_ndjson, char **markdown);

/* Decimal strings keep the arithmetic exact; NULL selects the default
 * (5.60 per SCU, 0.20 per hour per deployment, 2 deployments, 0 hours).
 * Result: {"scu_total","scu_cost","compute_cost","total"} as strings. */
CF_API cf_status cf_estimate_cost(const char *usage_ndjson, const char *scu_price, const char *compute_hourly,
                                  const char *deployments, const char *hours, char **result_json);

#ifdef __cplusplus
}
#endif

#endif /* CTIFORGE_H */
