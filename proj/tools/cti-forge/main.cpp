#include "config.hpp"

#include <ctiforge.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitUsage = 2;

struct CfString {
  char *p = nullptr;
  ~CfString() { cf_string_free(p); }
  char **out() { return &p; }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T *)>
struct Handle {
  T *p = nullptr;
  ~Handle() { Free(p); }
};

struct Exit {
  int code;
};

bool g_quiet = false;

[[noreturn]] void die(int code, const std::string &msg) {
  std::cerr << "cti-forge: " << msg << "\n";
  throw Exit{code};
}

void check(cf_status st) {
  if (st == CF_OK) return;
  std::string msg = cf_last_error();
  const std::string stage = cf_last_error_stage();
  if (!stage.empty()) msg = "[" + stage + "] " + msg;
  die(cf_exit_code(st), msg);
}

std::string read_input(const std::string &path) {
  if (path.empty() || path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) die(kExitUsage, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool interactive() { return isatty(STDIN_FILENO) && isatty(STDERR_FILENO); }

// ---------------------------------------------------------------------------

struct Globals {
  std::string config_path;
  std::string store_path;
  std::string store_kind;
  std::string catalog;
  std::string data_dir;
};

cli::Config effective_config(const Globals &g) {
  cli::Config cfg;
  try {
    cfg = cli::load_config(g.config_path);
    if (!g.store_path.empty()) cfg.store_path = g.store_path;
    if (!g.store_kind.empty()) cfg.store_kind = g.store_kind;
    if (!g.catalog.empty()) cfg.attack_catalog = g.catalog;
    if (!g.data_dir.empty()) cfg.data_dir = g.data_dir;
    cli::check_config(cfg);
  } catch (const cli::ConfigError &e) {
    die(kExitUsage, e.what());
  }
  return cfg;
}

const char *or_null(const std::string &s) { return s.empty() ? nullptr : s.c_str(); }

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
  std::string intel, type, name, request_file;
  std::string backend, base_url, model;
  std::optional<double> temperature;
  std::optional<long long> generated_at;
  bool sequential = false;
  bool no_prompt = false;
};

json engine_config(const cli::Config &cfg, const GenerateArgs &a) {
  json c;
  c["store_kind"] = cfg.store_kind;
  c["store_path"] = cfg.store_path;
  c["create_store"] = true;
  if (!cfg.attack_catalog.empty()) c["attack_catalog"] = cfg.attack_catalog;
  if (!cfg.data_dir.empty()) c["data_dir"] = cfg.data_dir;
  if (!cfg.software_list.empty()) c["software_list"] = cfg.software_list;
  if (!cfg.adversary_aliases.empty()) c["adversary_aliases"] = cfg.adversary_aliases;

  json b;
  b["kind"] = a.backend.empty() ? cfg.backend : a.backend;
  const std::string base_url = a.base_url.empty() ? cfg.base_url : a.base_url;
  const std::string model = a.model.empty() ? cfg.model : a.model;
  if (!base_url.empty()) b["base_url"] = base_url;
  if (!model.empty()) b["model"] = model;
  if (a.temperature) b["temperature"] = *a.temperature;
  else if (cfg.temperature) b["temperature"] = *cfg.temperature;
  if (cfg.backend_timeout_s) b["timeout_s"] = *cfg.backend_timeout_s;
  c["backend"] = b;

  json l = json::object();
  if (cfg.fetch_timeout_s) l["timeout_s"] = *cfg.fetch_timeout_s;
  if (cfg.max_bytes) l["max_bytes"] = *cfg.max_bytes;
  if (cfg.max_redirects) l["max_redirects"] = *cfg.max_redirects;
  c["limits"] = l;
  if (a.generated_at) c["generated_at"] = *a.generated_at;
  c["parallel"] = !a.sequential;
  return c;
}

void on_stage(const char *stage, double seconds, void *) {
  if (g_quiet) return;
  std::fprintf(stderr, "stage %-8s done in %.3f s\n", stage, seconds);
}

std::string ask_new_name(const std::string &taken) {
  std::cerr << "A report named '" << taken << "' already exists. Enter a new file name: " << std::flush;
  std::string line;
  if (!std::getline(std::cin, line) || line.empty()) die(CF_ERR_NAME_TAKEN, "no new name given");
  return line;
}

int cmd_generate(const Globals &g, GenerateArgs a) {
  const cli::Config cfg = effective_config(g);
  json req;
  if (!a.request_file.empty()) {
    try {
      req = json::parse(read_input(a.request_file));
    } catch (const json::exception &e) {
      die(kExitUsage, std::string("request file is not valid JSON: ") + e.what());
    }
    if (!req.is_object()) die(kExitUsage, "request file must hold a JSON object");
  } else {
    if (a.intel.empty() || a.type.empty() || a.name.empty()) {
      die(kExitUsage, "generate needs --intel, --type and --name, or --request-file");
    }
    req = {{"intelInfo", a.intel}, {"threatType", a.type}, {"fileName", a.name}};
  }

  Handle<cf_engine, cf_engine_free> engine;
  check(cf_engine_create(engine_config(cfg, a).dump().c_str(), &engine.p));
  cf_engine_set_progress(engine.p, on_stage, nullptr);

  const bool can_prompt = !a.no_prompt && interactive();
  for (;;) {
    const std::string payload = req.dump();
    cf_status st = cf_engine_validate(engine.p, payload.c_str());
    CfString result;
    if (st == CF_OK) st = cf_engine_run(engine.p, payload.c_str(), result.out());
    if (st == CF_ERR_NAME_TAKEN && can_prompt) {
      req["fileName"] = ask_new_name(req.value("fileName", ""));
      continue;
    }
    check(st);
    const json r = json::parse(result.str());
    std::cout << "commit " << r["commit"]["id"].get<std::string>() << "\n"
              << "report " << r["report_path"].get<std::string>() << "\n";
    return 0;
  }
}

// ---- monitor --------------------------------------------------------------

struct MonitorArgs {
  std::string name, since;
  std::optional<double> interval, timeout;
  bool from_start = false;
};

void on_poll(int n, void *) {
  if (!g_quiet) std::fprintf(stderr, "poll %d\n", n);
}

int cmd_monitor(const Globals &g, const MonitorArgs &a) {
  const cli::Config cfg = effective_config(g);
  const double interval = a.interval.value_or(cfg.monitor_interval);
  const double timeout = a.timeout.value_or(cfg.monitor_timeout);
  if (interval <= 0) die(kExitUsage, "--interval must be positive");
  if (timeout < 0) die(kExitUsage, "--timeout must be nonnegative");

  Handle<cf_store, cf_store_free> store;
  check(cf_store_open(cfg.store_kind.c_str(), cfg.store_path.c_str(), 0, &store.p));
  CfString commit;
  int polls = 0;
  check(cf_monitor(store.p, a.name.c_str(), interval, timeout, or_null(a.since), a.from_start ? 1 : 0, on_poll,
                   nullptr, commit.out(), &polls));
  const json c = json::parse(commit.str());
  std::cout << c["id"].get<std::string>() << "\n";
  return 0;
}

// ---- check-name -----------------------------------------------------------

int cmd_check_name(const Globals &g, const std::string &name) {
  const cli::Config cfg = effective_config(g);
  Handle<cf_store, cf_store_free> store;
  check(cf_store_open(cfg.store_kind.c_str(), cfg.store_path.c_str(), 1, &store.p));
  check(cf_check_name(store.p, name.c_str()));
  std::cout << name << " is available\n";
  return 0;
}

// ---- evaluate -------------------------------------------------------------

struct Pair {
  std::string name, ai, manual;
};

struct EvaluateArgs {
  std::vector<std::string> ai, manual, names;
  std::string manifest;
  std::string scope = "1,2";
  std::string similarity;
  unsigned long long seed = 0x5eed;
  std::string ndjson;
  std::string format = "table";
};

std::string stem_of(const std::string &path) {
  std::string s = fs::path(path).filename().string();
  for (const char *suffix : {".ai.md", ".md", ".txt"}) {
    const std::string suf = suffix;
    if (s.size() > suf.size() && s.ends_with(suf)) return s.substr(0, s.size() - suf.size());
  }
  return s;
}

std::vector<Pair> pairs_from_manifest(const std::string &path) {
  std::vector<Pair> out;
  if (fs::is_directory(path)) {
    const fs::path listed = fs::path(path) / "manifest.json";
    if (fs::exists(listed)) return pairs_from_manifest(listed.string());
    std::vector<fs::path> ais;
    for (const auto &e : fs::directory_iterator(path)) {
      const std::string f = e.path().filename().string();
      if (f.ends_with(".ai.md")) ais.push_back(e.path());
    }
    std::sort(ais.begin(), ais.end());
    for (const auto &p : ais) {
      const std::string stem = stem_of(p.string());
      const fs::path manual = p.parent_path() / (stem + ".manual.md");
      if (!fs::exists(manual)) die(kExitUsage, "no manual report for " + p.string());
      out.push_back({stem, p.string(), manual.string()});
    }
    if (out.empty()) die(kExitUsage, "no *.ai.md reports in " + path);
    return out;
  }

  json doc;
  try {
    doc = json::parse(read_input(path));
  } catch (const json::exception &e) {
    die(kExitUsage, std::string("manifest is not valid JSON: ") + e.what());
  }
  const json &list = doc.is_object() && doc.contains("pairs") ? doc["pairs"] : doc;
  if (!list.is_array()) die(kExitUsage, "manifest must be an array of {name, ai, manual}");
  const fs::path base = fs::path(path).parent_path();
  for (const auto &item : list) {
    if (!item.is_object() || !item.contains("ai") || !item.contains("manual")) {
      die(kExitUsage, "manifest entries need \"ai\" and \"manual\"");
    }
    auto resolve = [&](const std::string &p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
    const std::string ai = resolve(item["ai"].get<std::string>());
    out.push_back({item.value("name", stem_of(ai)), ai, resolve(item["manual"].get<std::string>())});
  }
  return out;
}

std::vector<int> parse_scope(const std::string &s) {
  std::vector<int> out;
  if (s == "all" || s.empty()) return out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception &) {
      die(kExitUsage, "--scope expects section ordinals such as 1,2 or 'all'");
    }
    if (v < 1 || v > 7) die(kExitUsage, "--scope ordinals must be between 1 and 7");
    out.push_back(v);
  }
  return out;
}

int cmd_evaluate(const Globals &g, const EvaluateArgs &a) {
  const cli::Config cfg = effective_config(g);
  std::vector<Pair> pairs;
  if (!a.manifest.empty()) {
    pairs = pairs_from_manifest(a.manifest);
  } else {
    if (a.ai.empty() || a.ai.size() != a.manual.size()) die(kExitUsage, "give --ai and --manual in pairs");
    if (!a.names.empty() && a.names.size() != a.ai.size()) die(kExitUsage, "--label count must match --ai count");
    for (std::size_t i = 0; i < a.ai.size(); ++i) {
      pairs.push_back({a.names.empty() ? stem_of(a.ai[i]) : a.names[i], a.ai[i], a.manual[i]});
    }
  }

  json opts;
  if (!cfg.adversary_aliases.empty()) opts["adversary_aliases"] = cfg.adversary_aliases;
  else if (!cfg.data_dir.empty()) opts["adversary_aliases"] = (fs::path(cfg.data_dir) / "adversaries.csv").string();
  if (!cfg.stopwords.empty()) opts["stopwords"] = cfg.stopwords;
  opts["similarity_scope"] = parse_scope(a.scope);
  const std::string sim = a.similarity.empty() ? cfg.embedding : a.similarity;
  if (sim == "hashed") {
    opts["embedding"] = {{"kind", "hashed"}, {"seed", a.seed}};
  } else if (sim == "http") {
    opts["embedding"] = {{"kind", "http"}, {"base_url", cfg.embedding_base_url}, {"model", cfg.embedding_model}};
  } else if (sim != "none") {
    die(kExitUsage, "--similarity must be none, hashed or http");
  }

  std::string catalog_path = cfg.attack_catalog;
  if (catalog_path.empty() && !cfg.data_dir.empty()) {
    catalog_path = (fs::path(cfg.data_dir) / "attack-enterprise-13.1.csv").string();
  }
  Handle<cf_catalog, cf_catalog_free> cat;
  check(cf_catalog_load(or_null(catalog_path), &cat.p));

  const std::string opts_text = opts.dump();
  std::string rows;
  for (const auto &p : pairs) {
    const std::string ai = read_input(p.ai);
    const std::string manual = read_input(p.manual);
    CfString row;
    check(cf_compare_reports(cat.p, p.name.c_str(), ai.c_str(), manual.c_str(), opts_text.c_str(), row.out()));
    rows += row.str() + "\n";
  }

  if (a.format == "table" || a.format == "both") {
    CfString table;
    check(cf_render_comparison_table(rows.c_str(), table.out()));
    std::cout << table.str();
  }
  if (a.format == "ndjson" || a.format == "both") {
    if (a.format == "both") std::cout << "\n";
    std::cout << rows;
  }
  if (!a.ndjson.empty()) {
    std::ofstream out(a.ndjson, std::ios::binary);
    if (!out) die(kExitUsage, "cannot write " + a.ndjson);
    out << rows;
  }
  return 0;
}

// ---- extract-iocs / cost --------------------------------------------------

int cmd_extract_iocs(const std::string &path, bool as_json) {
  const std::string text = read_input(path);
  CfString out;
  check(as_json ? cf_extract_iocs_json(text.data(), text.size(), out.out())
                : cf_extract_iocs_tsv(text.data(), text.size(), out.out()));
  std::cout << out.str();
  if (as_json) std::cout << "\n";
  return 0;
}

struct CostArgs {
  std::string usage = "-";
  std::string scu_price, compute_hourly, deployments, hours;
  bool as_json = false;
};

int cmd_cost(const Globals &g, const CostArgs &a) {
  const cli::Config cfg = effective_config(g);
  auto pick = [](const std::string &flag, const std::string &conf) { return flag.empty() ? conf : flag; };
  const std::string usage = read_input(a.usage);
  CfString out;
  check(cf_estimate_cost(usage.c_str(), pick(a.scu_price, cfg.scu_price).c_str(),
                         pick(a.compute_hourly, cfg.compute_hourly).c_str(),
                         pick(a.deployments, cfg.deployments).c_str(), pick(a.hours, cfg.hours).c_str(), out.out()));
  const json r = json::parse(out.str());
  if (a.as_json) {
    std::cout << r.dump() << "\n";
    return 0;
  }
  std::cout << "scu_total     " << r["scu_total"].get<std::string>() << "\n"
            << "scu_cost      " << r["scu_cost"].get<std::string>() << "\n"
            << "compute_cost  " << r["compute_cost"].get<std::string>() << "\n"
            << "total         " << r["total"].get<std::string>() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"cti-forge: build CTI reports from threat intelligence sources"};
  app.set_version_flag("--version", std::string(cf_version()));
  app.require_subcommand(1);

  Globals g;
  app.add_option("-c,--config", g.config_path, "TOML config file (default ./cti-forge.toml)");
  app.add_option("--store", g.store_path, "Report store directory");
  app.add_option("--store-kind", g.store_kind, "journal or git")->check(CLI::IsMember({"journal", "git"}));
  app.add_option("--catalog,--attack-catalog", g.catalog, "ATT&CK technique CSV");
  app.add_option("--data-dir", g.data_dir, "Directory with the bundled word lists");
  app.add_flag("-q,--quiet", g_quiet, "No progress lines on stderr");

  GenerateArgs gen;
  auto *generate = app.add_subcommand("generate", "Generate and commit a report");
  generate->add_option("--intel", gen.intel, "URL, file path or inline text");
  generate->add_option("--type", gen.type, "Campaign, Threat Actor, Vulnerability or Malware/Tool");
  generate->add_option("--name", gen.name, "Report file name (*.md)");
  generate->add_option("--request-file", gen.request_file, "JSON trigger payload ('-' for stdin)");
  generate->add_option("--backend", gen.backend, "rule or llm-http")->check(CLI::IsMember({"rule", "llm-http"}));
  generate->add_option("--base-url", gen.base_url, "llm-http endpoint base URL");
  generate->add_option("--model", gen.model, "llm-http model name");
  generate->add_option("--temperature", gen.temperature, "llm-http sampling temperature");
  generate->add_option("--generated-at", gen.generated_at, "Creation time as Unix seconds");
  generate->add_flag("--sequential", gen.sequential, "Generate sections one at a time");
  generate->add_flag("--no-prompt", gen.no_prompt, "Never ask for a new name");

  MonitorArgs mon;
  auto *monitor = app.add_subcommand("monitor", "Wait for a report to be committed");
  monitor->add_option("--name", mon.name, "Report file name")->required();
  monitor->add_option("--interval", mon.interval, "Seconds between polls (default 120)");
  monitor->add_option("--timeout", mon.timeout, "Give up after this many seconds (0: never)");
  monitor->add_option("--since", mon.since, "Only commits after this id count");
  monitor->add_flag("--from-start", mon.from_start, "Count the whole history");

  EvaluateArgs ev;
  auto *evaluate = app.add_subcommand("evaluate", "Compare AI reports against manual ones");
  evaluate->add_option("--ai", ev.ai, "AI-generated report (repeatable)");
  evaluate->add_option("--manual", ev.manual, "Manual report, paired with --ai by position");
  evaluate->add_option("--label", ev.names, "Row label, paired with --ai by position");
  evaluate->add_option("--manifest", ev.manifest, "JSON manifest or a directory of *.ai.md / *.manual.md");
  evaluate->add_option("--scope", ev.scope, "Section ordinals for similarity, or 'all'")->capture_default_str();
  evaluate->add_option("--similarity", ev.similarity, "Embedding similarity: none, hashed or http");
  evaluate->add_option("--seed", ev.seed, "Seed of the hashed embedding");
  evaluate->add_option("--ndjson", ev.ndjson, "Also write the rows as NDJSON to this file");
  evaluate->add_option("--format", ev.format, "table, ndjson or both")->capture_default_str()
      ->check(CLI::IsMember({"table", "ndjson", "both"}));

  std::string ioc_input;
  bool ioc_json = false;
  auto *extract = app.add_subcommand("extract-iocs", "Print indicators found in a file or stdin");
  extract->add_option("input", ioc_input, "Input file ('-' or omitted for stdin)");
  extract->add_flag("--json", ioc_json, "JSON array instead of TSV");

  CostArgs cost;
  auto *cost_cmd = app.add_subcommand("cost", "Estimate cost from usage records");
  cost_cmd->add_option("--usage", cost.usage, "Usage NDJSON file ('-' for stdin)")->capture_default_str();
  cost_cmd->add_option("--scu-price", cost.scu_price, "Price per SCU");
  cost_cmd->add_option("--compute-hourly", cost.compute_hourly, "Price per deployment hour");
  cost_cmd->add_option("--deployments", cost.deployments, "Number of deployments");
  cost_cmd->add_option("--hours", cost.hours, "Hours of compute");
  cost_cmd->add_flag("--json", cost.as_json, "JSON output");

  std::string check_name;
  auto *check_cmd = app.add_subcommand("check-name", "Check that a report name is valid and unused");
  check_cmd->add_option("--name", check_name, "Report file name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(g, gen);
    if (*monitor) return cmd_monitor(g, mon);
    if (*evaluate) return cmd_evaluate(g, ev);
    if (*extract) return cmd_extract_iocs(ioc_input, ioc_json);
    if (*cost_cmd) return cmd_cost(g, cost);
    if (*check_cmd) return cmd_check_name(g, check_name);
  } catch (const Exit &e) {
    return e.code;
  } catch (const std::exception &e) {
    std::cerr << "cti-forge: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
