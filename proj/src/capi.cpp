#include "ctiforge.h"

#include "ctiforge/attack.hpp"
#include "ctiforge/cost.hpp"
#include "ctiforge/errors.hpp"
#include "ctiforge/eval.hpp"
#include "ctiforge/ingest.hpp"
#include "ctiforge/ioc.hpp"
#include "ctiforge/lexicon.hpp"
#include "ctiforge/llm_backend.hpp"
#include "ctiforge/pipeline.hpp"
#include "ctiforge/rule_backend.hpp"
#include "ctiforge/store.hpp"
#include "ctiforge/text.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <cstring>
#include <memory>

using namespace ctiforge;
using ojson = nlohmann::ordered_json;

struct cf_catalog {
  Catalog cat;
};

struct cf_store {
  std::unique_ptr<ReportStore> store;
};

struct cf_engine {
  cf_store store;
  cf_catalog catalog;
  Lexicon lexicon;
  std::unique_ptr<GenBackend> backend;
  RunOptions options;
  cf_stage_fn progress = nullptr;
  void *progress_user = nullptr;
};

namespace {

struct LastError {
  std::string message;
  std::string kind;
  std::string stage;
};
thread_local LastError g_error;

cf_status status_for(ErrorCode code) {
  switch (exit_code_for(code)) {
    case 2: return CF_ERR_VALIDATION;
    case 3: return CF_ERR_NAME_TAKEN;
    case 4: return CF_ERR_FETCH;
    case 5: return CF_ERR_GENERATION;
    case 6: return CF_ERR_STORE;
    case 7: return CF_ERR_MONITOR_TIMEOUT;
    default: break;
  }
  switch (code) {
    case ErrorCode::MissingCorpusStats:
    case ErrorCode::ZeroVector:
    case ErrorCode::ProviderError:
    case ErrorCode::EmptyReference:
      return CF_ERR_EVALUATION;
    default:
      return CF_ERR_INTERNAL;
  }
}

template <typename F>
cf_status guarded(F &&body) {
  g_error = {};
  try {
    body();
    return CF_OK;
  } catch (const Error &e) {
    g_error = {e.what(), std::string(to_string(e.code())), e.stage()};
    return status_for(e.code());
  } catch (const std::bad_alloc &) {
    g_error = {"out of memory", "Internal", ""};
    return CF_ERR_INTERNAL;
  } catch (const std::exception &e) {
    g_error = {e.what(), "Internal", ""};
    return CF_ERR_INTERNAL;
  }
}

void require(bool ok, const char *what) {
  if (!ok) fail(ErrorCode::InvalidArgument, std::string("invalid argument: ") + what);
}

char *dup_string(std::string_view s) {
  char *p = static_cast<char *>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

std::string_view view(const char *text, size_t len) { return len ? std::string_view(text, len) : std::string_view(); }

ojson commit_json(const CommitRef &c) {
  ojson j;
  j["id"] = c.id;
  j["parent"] = c.parent ? ojson(*c.parent) : ojson(nullptr);
  j["files"] = c.files;
  j["message"] = c.message;
  j["timestamp"] = c.timestamp;
  return j;
}

ojson usage_json(const UsageRecord &u) { return ojson::parse(usage_to_json(u)); }

template <typename T>
T get_or(const nlohmann::json &j, const char *key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception &) {
    fail(ErrorCode::InvalidArgument, std::string("config field '") + key + "' has the wrong type");
  }
}

nlohmann::json parse_json(const char *text, const char *what) {
  if (!text || !*text) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::InvalidArgument, std::string(what) + " is not valid JSON: " + e.what());
  }
}

constexpr const char *kCatalogFile = "attack-enterprise-13.1.csv";

std::filesystem::path default_catalog_path() { return default_data_dir() / kCatalogFile; }

Decimal decimal_or(const char *s, const char *fallback) { return Decimal::parse(s && *s ? s : fallback); }

}  // namespace

extern "C" {

const char *cf_version(void) { return kVersion.data(); }
const char *cf_last_error(void) { return g_error.message.c_str(); }
const char *cf_last_error_kind(void) { return g_error.kind.c_str(); }
const char *cf_last_error_stage(void) { return g_error.stage.c_str(); }

int cf_exit_code(cf_status status) {
  const int s = static_cast<int>(status);
  return (s >= 0 && s <= 7) ? s : 1;
}

void cf_string_free(char *s) { std::free(s); }

cf_status cf_refang(const char *text, size_t len, char **out) {
  return guarded([&] {
    require(out && (text || len == 0), "cf_refang");
    *out = dup_string(refang(view(text, len)));
  });
}

cf_status cf_extract_iocs_tsv(const char *text, size_t len, char **out) {
  return guarded([&] {
    require(out && (text || len == 0), "cf_extract_iocs_tsv");
    *out = dup_string(iocs_to_tsv(extract_iocs(view(text, len))));
  });
}

cf_status cf_extract_iocs_json(const char *text, size_t len, char **out) {
  return guarded([&] {
    require(out && (text || len == 0), "cf_extract_iocs_json");
    ojson arr = ojson::array();
    for (const auto &i : extract_iocs(view(text, len))) {
      ojson j;
      j["kind"] = kind_name(i.kind);
      j["value"] = i.value;
      j["raw"] = i.raw;
      j["begin"] = i.span.begin;
      j["end"] = i.span.end;
      j["defanged"] = i.defanged;
      j["is_private"] = i.is_private;
      arr.push_back(std::move(j));
    }
    *out = dup_string(arr.dump());
  });
}

cf_status cf_catalog_load(const char *path, cf_catalog **out) {
  return guarded([&] {
    require(out, "cf_catalog_load");
    *out = new cf_catalog{Catalog::load(path ? std::filesystem::path(path) : default_catalog_path())};
  });
}

void cf_catalog_free(cf_catalog *cat) { delete cat; }

size_t cf_catalog_size(const cf_catalog *cat) { return cat ? cat->cat.size() : 0; }

cf_status cf_catalog_version(const cf_catalog *cat, char **out) {
  return guarded([&] {
    require(cat && out, "cf_catalog_version");
    *out = dup_string(cat->cat.version());
  });
}

cf_status cf_catalog_lookup(const cf_catalog *cat, const char *id, char **technique_json) {
  return guarded([&] {
    require(cat && id && technique_json, "cf_catalog_lookup");
    const Technique &t = cat->cat.lookup(id);
    ojson j;
    j["id"] = t.id;
    j["name"] = t.name;
    j["tactics"] = t.tactics;
    j["parent_id"] = t.parent_id ? ojson(*t.parent_id) : ojson(nullptr);
    j["description"] = t.description;
    *technique_json = dup_string(j.dump());
  });
}

cf_status cf_extract_ttps_json(const cf_catalog *cat, const char *text, size_t len, char **out) {
  return guarded([&] {
    require(cat && out && (text || len == 0), "cf_extract_ttps_json");
    ojson arr = ojson::array();
    for (const auto &h : extract_ttp_ids(view(text, len), cat->cat)) {
      arr.push_back({{"technique_id", h.technique_id}, {"evidence", h.evidence}, {"matched_by", match_kind_name(h.matched_by)}});
    }
    *out = dup_string(arr.dump());
  });
}

cf_status cf_render_mitre_table(const cf_catalog *cat, const char *text, size_t len, char **out) {
  return guarded([&] {
    require(cat && out && (text || len == 0), "cf_render_mitre_table");
    *out = dup_string(render_mitre_table(extract_ttp_ids(view(text, len), cat->cat), cat->cat));
  });
}

cf_status cf_store_open(const char *kind, const char *path, int create, cf_store **out) {
  return guarded([&] {
    require(kind && path && out, "cf_store_open");
    const StoreKind k = parse_store_kind(kind);
    *out = new cf_store{create ? init_store(k, path) : open_store(k, path)};
  });
}

void cf_store_free(cf_store *store) { delete store; }

cf_status cf_store_exists(cf_store *store, const char *name, int *exists) {
  return guarded([&] {
    require(store && name && exists, "cf_store_exists");
    *exists = store->store->exists(name) ? 1 : 0;
  });
}

cf_status cf_store_put(cf_store *store, const char *name, const char *content, size_t len, const char *message,
                       char **commit_json_out) {
  return guarded([&] {
    require(store && name && (content || len == 0) && message, "cf_store_put");
    const CommitRef c = store->store->put(name, view(content, len), message);
    if (commit_json_out) *commit_json_out = dup_string(commit_json(c).dump());
  });
}

cf_status cf_store_read(cf_store *store, const char *name, char **content, size_t *len) {
  return guarded([&] {
    require(store && name && content, "cf_store_read");
    const std::string body = store->store->read(name);
    *content = dup_string(body);
    if (len) *len = body.size();
  });
}

cf_status cf_store_latest(cf_store *store, char **out) {
  return guarded([&] {
    require(store && out, "cf_store_latest");
    const auto c = store->store->latest_commit();
    *out = dup_string(c ? commit_json(*c).dump() : "null");
  });
}

cf_status cf_store_list_since(cf_store *store, const char *since_id, char **out) {
  return guarded([&] {
    require(store && out, "cf_store_list_since");
    std::optional<std::string> since;
    if (since_id && *since_id) since = since_id;
    ojson arr = ojson::array();
    for (const auto &c : store->store->list_commits_since(since)) arr.push_back(commit_json(c));
    *out = dup_string(arr.dump());
  });
}

cf_status cf_store_path_of(cf_store *store, const char *name, char **path) {
  return guarded([&] {
    require(store && name && path, "cf_store_path_of");
    *path = dup_string(store->store->path_of(name).string());
  });
}

cf_status cf_check_name(cf_store *store, const char *name) {
  return guarded([&] {
    require(store && name, "cf_check_name");
    validate_file_name(name);
    if (store->store->exists(name)) {
      fail(ErrorCode::NameTaken, std::string("a report named ") + name + " already exists; choose a new name");
    }
  });
}

cf_status cf_monitor(cf_store *store, const char *name, double interval_s, double timeout_s, const char *since_id,
                     int from_start, cf_poll_fn on_poll, void *user, char **commit_json_out, int *polls) {
  return guarded([&] {
    require(store && name, "cf_monitor");
    MonitorOptions opts;
    opts.interval = std::chrono::duration<double>(interval_s);
    if (timeout_s > 0) opts.timeout = std::chrono::duration<double>(timeout_s);
    if (since_id && *since_id) opts.since_id = since_id;
    opts.from_start = from_start != 0;
    if (on_poll) opts.on_poll = [on_poll, user](int n) { on_poll(n, user); };
    const MonitorResult r = monitor(*store->store, name, opts);
    if (commit_json_out) *commit_json_out = dup_string(commit_json(r.commit).dump());
    if (polls) *polls = r.polls;
  });
}

cf_status cf_engine_create(const char *config_json, cf_engine **out) {
  return guarded([&] {
    require(out, "cf_engine_create");
    const auto cfg = parse_json(config_json, "engine config");
    auto engine = std::make_unique<cf_engine>();

    const std::filesystem::path data_dir = get_or<std::string>(cfg, "data_dir", default_data_dir().string());
    const std::string catalog_path = get_or<std::string>(cfg, "attack_catalog", (data_dir / kCatalogFile).string());
    engine->catalog.cat = Catalog::load(catalog_path);
    engine->lexicon.software =
        load_word_list(get_or<std::string>(cfg, "software_list", (data_dir / "software.txt").string()));
    engine->lexicon.adversaries =
        load_adversaries(get_or<std::string>(cfg, "adversary_aliases", (data_dir / "adversaries.csv").string()));

    const StoreKind kind = parse_store_kind(get_or<std::string>(cfg, "store_kind", "journal"));
    const std::string store_path = get_or<std::string>(cfg, "store_path", "reports");
    engine->store.store = get_or<bool>(cfg, "create_store", true) ? init_store(kind, store_path)
                                                                    : open_store(kind, store_path);

    const auto backend = cfg.contains("backend") ? cfg["backend"] : nlohmann::json::object();
    const std::string backend_kind = get_or<std::string>(backend, "kind", "rule");
    if (backend_kind == "rule") {
      engine->backend = std::make_unique<RuleBackend>();
    } else if (backend_kind == "llm-http") {
      LlmHttpConfig lc;
      lc.base_url = get_or<std::string>(backend, "base_url", lc.base_url);
      lc.model = get_or<std::string>(backend, "model", lc.model);
      lc.temperature = get_or<double>(backend, "temperature", lc.temperature);
      lc.api_key = get_or<std::string>(backend, "api_key", "");
      lc.timeout = std::chrono::seconds(get_or<long long>(backend, "timeout_s", lc.timeout.count()));
      if (backend.contains("scu_base_rate")) {
        const auto &v = backend["scu_base_rate"];
        lc.scu_base_rate = v.is_string() ? Decimal::parse(v.get<std::string>()) : Decimal::from_double(v.get<double>());
      }
      engine->backend = std::make_unique<LlmHttpBackend>(with_env_api_key(lc));
    } else {
      fail(ErrorCode::InvalidArgument, "unknown backend '" + backend_kind + "' (expected rule or llm-http)");
    }

    const auto limits = cfg.contains("limits") ? cfg["limits"] : nlohmann::json::object();
    auto &lim = engine->options.limits;
    lim.timeout = std::chrono::seconds(get_or<long long>(limits, "timeout_s", lim.timeout.count()));
    lim.max_bytes = get_or<std::size_t>(limits, "max_bytes", lim.max_bytes);
    lim.max_redirects = get_or<int>(limits, "max_redirects", lim.max_redirects);
    if (lim.timeout.count() <= 0) fail(ErrorCode::InvalidArgument, "limits.timeout_s must be positive");

    const auto retry = cfg.contains("retry") ? cfg["retry"] : nlohmann::json::object();
    engine->options.retry.max_attempts = get_or<int>(retry, "max_attempts", engine->options.retry.max_attempts);
    engine->options.retry.initial_backoff =
        std::chrono::milliseconds(get_or<long long>(retry, "initial_backoff_ms", engine->options.retry.initial_backoff.count()));
    if (cfg.contains("generated_at") && !cfg["generated_at"].is_null()) {
      engine->options.generated_at =
          std::chrono::system_clock::time_point(std::chrono::seconds(get_or<long long>(cfg, "generated_at", 0)));
    }
    engine->options.parallel = get_or<bool>(cfg, "parallel", true);
    *out = engine.release();
  });
}

void cf_engine_free(cf_engine *engine) { delete engine; }

cf_store *cf_engine_store(cf_engine *engine) { return engine ? &engine->store : nullptr; }
const cf_catalog *cf_engine_catalog(cf_engine *engine) { return engine ? &engine->catalog : nullptr; }

void cf_engine_set_progress(cf_engine *engine, cf_stage_fn fn, void *user) {
  if (!engine) return;
  engine->progress = fn;
  engine->progress_user = user;
}

cf_status cf_engine_validate(cf_engine *engine, const char *request_json) {
  return guarded([&] {
    require(engine && request_json, "cf_engine_validate");
    validate_request(request_from_json(request_json), *engine->store.store);
  });
}

cf_status cf_engine_run(cf_engine *engine, const char *request_json, char **result_json) {
  return guarded([&] {
    require(engine && request_json && result_json, "cf_engine_run");
    const IntelRequest req = validate_request(request_from_json(request_json), *engine->store.store);
    PipelineDeps deps;
    deps.store = engine->store.store.get();
    deps.backends = {engine->backend.get(), engine->backend.get(), engine->backend.get()};
    deps.catalog = &engine->catalog.cat;
    deps.lexicon = &engine->lexicon;
    deps.options = engine->options;
    if (engine->progress) {
      deps.options.on_stage = [engine](const StageTiming &t) {
        engine->progress(t.stage.c_str(), t.seconds, engine->progress_user);
      };
    }
    const RunResult r = run(req, deps);

    ojson j;
    j["file_name"] = r.report.file_name;
    j["title"] = report_title(r.report.file_name);
    j["report_path"] = engine->store.store->path_of(r.report.file_name).string();
    j["commit"] = commit_json(r.commit);
    ojson sections = ojson::array();
    for (const auto &s : r.report.sections) {
      sections.push_back({{"ordinal", ordinal(s.kind)},
                          {"heading", heading(s.kind)},
                          {"backend", s.meta.backend_id},
                          {"attempts", s.meta.attempts}});
    }
    j["sections"] = std::move(sections);
    ojson usages = ojson::array();
    for (const auto &u : r.usages) usages.push_back(usage_json(u));
    j["usages"] = std::move(usages);
    ojson timings = ojson::array();
    for (const auto &t : r.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    j["timings"] = std::move(timings);
    j["iocs"] = r.iocs.size();
    j["ttps"] = r.ttps.size();
    *result_json = dup_string(j.dump());
  });
}

cf_status cf_text_cosine(const char *a, const char *b, double *out) {
  return guarded([&] {
    require(a && b && out, "cf_text_cosine");
    *out = text_cosine(a, b);
  });
}

cf_status cf_hashed_embed_similarity(const char *a, const char *b, uint64_t seed, double *out) {
  return guarded([&] {
    require(a && b && out, "cf_hashed_embed_similarity");
    HashedEmbeddingProvider provider(seed);
    *out = embed_similarity(a, b, provider);
  });
}

cf_status cf_compare_reports(const cf_catalog *cat, const char *report_name, const char *ai, const char *manual,
                             const char *options_json, char **row_json) {
  return guarded([&] {
    require(cat && report_name && ai && manual && row_json, "cf_compare_reports");
    const auto opts_json = parse_json(options_json, "compare options");
    CompareOptions opts;
    std::vector<AdversaryGroup> groups = load_adversaries(
        get_or<std::string>(opts_json, "adversary_aliases", (default_data_dir() / "adversaries.csv").string()));
    opts.adversaries = &groups;
    std::vector<std::string> stopwords;
    if (opts_json.contains("stopwords")) {
      stopwords = load_stopwords(get_or<std::string>(opts_json, "stopwords", ""));
      opts.stopwords = &stopwords;
    }
    if (opts_json.contains("similarity_scope")) {
      opts.similarity_scope.clear();
      for (const auto &v : opts_json["similarity_scope"]) opts.similarity_scope.push_back(section_from_ordinal(v.get<int>()));
    }
    std::unique_ptr<EmbeddingProvider> provider;
    if (opts_json.contains("embedding")) {
      const auto &e = opts_json["embedding"];
      const std::string kind = get_or<std::string>(e, "kind", "hashed");
      if (kind == "hashed") {
        provider = std::make_unique<HashedEmbeddingProvider>(get_or<std::uint64_t>(e, "seed", 0x5eed));
      } else if (kind == "http") {
        HttpEmbeddingConfig hc;
        hc.base_url = get_or<std::string>(e, "base_url", "");
        hc.model = get_or<std::string>(e, "model", "");
        hc.api_key = get_or<std::string>(e, "api_key", "");
        if (hc.api_key.empty()) {
          if (const char *key = std::getenv("CTI_FORGE_API_KEY")) hc.api_key = key;
        }
        hc.max_tokens = get_or<std::size_t>(e, "max_tokens", hc.max_tokens);
        provider = std::make_unique<HttpEmbeddingProvider>(hc);
      } else {
        fail(ErrorCode::InvalidArgument, "unknown embedding provider '" + kind + "'");
      }
      opts.embeddings = provider.get();
    }
    *row_json = dup_string(comparison_row_to_json(compare_reports(report_name, ai, manual, cat->cat, opts)));
  });
}

cf_status cf_render_comparison_table(const char *rows_ndjson, char **markdown) {
  return guarded([&] {
    require(rows_ndjson && markdown, "cf_render_comparison_table");
    std::vector<ComparisonRow> rows;
    for (const auto &line : text::split(rows_ndjson, '\n')) {
      if (text::trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception &e) {
        fail(ErrorCode::ParseError, std::string("comparison row is not valid JSON: ") + e.what());
      }
      ComparisonRow r;
      r.report_name = get_or<std::string>(j, "report", "");
      if (j.contains("ioc_score") && !j["ioc_score"].is_null()) r.ioc_score = j["ioc_score"].get<double>();
      if (j.contains("ttp_score") && !j["ttp_score"].is_null()) r.ttp_score = j["ttp_score"].get<double>();
      const std::string apt = get_or<std::string>(j, "apt", "NotApplicable");
      r.apt = apt == "Present" ? AptStatus::Present : apt == "Absent" ? AptStatus::Absent : AptStatus::NotApplicable;
      rows.push_back(std::move(r));
    }
    *markdown = dup_string(render_comparison_table(rows));
  });
}

cf_status cf_estimate_cost(const char *usage_ndjson, const char *scu_price, const char *compute_hourly,
                           const char *deployments, const char *hours, char **result_json) {
  return guarded([&] {
    require(result_json, "cf_estimate_cost");
    CostModel model;
    model.scu_price = decimal_or(scu_price, "5.60");
    model.compute_hourly = decimal_or(compute_hourly, "0.20");
    model.deployments = decimal_or(deployments, "2");
    model.hours = decimal_or(hours, "0");
    const auto usages = usages_from_ndjson(usage_ndjson ? usage_ndjson : "");
    const CostEstimate est = estimate_cost(usages, model);
    ojson j;
    j["scu_total"] = est.scu_total.to_string();
    j["scu_cost"] = est.scu_cost.to_fixed(2);
    j["compute_cost"] = est.compute_cost.to_fixed(2);
    j["total"] = est.total.to_fixed(2);
    *result_json = dup_string(j.dump());
  });
}

}  // extern "C"
