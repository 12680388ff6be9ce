#include "config.hpp"

#include <toml.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

namespace cli {

namespace {

// Money and counts stay decimal strings; TOML floats are printed back with
// enough digits to round-trip.
std::string number_text(const toml::node &n, const std::string &key) {
  if (auto s = n.value_exact<std::string>()) return *s;
  if (auto i = n.value_exact<int64_t>()) return std::to_string(*i);
  if (auto d = n.value_exact<double>()) {
    std::ostringstream os;
    os.precision(15);
    os << *d;
    return os.str();
  }
  throw ConfigError("config: '" + key + "' must be a number");
}

template <typename T>
void read(const toml::table &t, const char *key, T &out, const std::string &prefix = "") {
  const toml::node *n = t.get(key);
  if (!n) return;
  auto v = n->value<T>();
  if (!v) throw ConfigError("config: '" + prefix + key + "' has the wrong type");
  out = *v;
}

template <typename T>
void read(const toml::table &t, const char *key, std::optional<T> &out, const std::string &prefix = "") {
  T v{};
  if (!t.get(key)) return;
  read(t, key, v, prefix);
  out = v;
}

void read_decimal(const toml::table &t, const char *key, std::string &out, const std::string &prefix) {
  if (const toml::node *n = t.get(key)) out = number_text(*n, prefix + key);
}

}  // namespace

Config load_config(const std::string &path) {
  Config cfg;
  std::string file = path;
  if (file.empty()) {
    if (!std::filesystem::exists("cti-forge.toml")) return cfg;
    file = "cti-forge.toml";
  } else if (!std::filesystem::exists(file)) {
    throw ConfigError("config file not found: " + file);
  }

  toml::table root;
  try {
    root = toml::parse_file(file);
  } catch (const toml::parse_error &e) {
    std::ostringstream os;
    os << "config: " << file << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }

  read(root, "store_path", cfg.store_path);
  read(root, "store_kind", cfg.store_kind);
  read(root, "attack_catalog", cfg.attack_catalog);
  read(root, "data_dir", cfg.data_dir);
  read(root, "software_list", cfg.software_list);
  read(root, "adversary_aliases", cfg.adversary_aliases);
  read(root, "stopwords", cfg.stopwords);

  if (auto *b = root["backend"].as_table()) {
    read(*b, "kind", cfg.backend, "backend.");
    read(*b, "base_url", cfg.base_url, "backend.");
    read(*b, "model", cfg.model, "backend.");
    read(*b, "temperature", cfg.temperature, "backend.");
    read(*b, "timeout_s", cfg.backend_timeout_s, "backend.");
  }
  if (auto *l = root["limits"].as_table()) {
    read(*l, "timeout_s", cfg.fetch_timeout_s, "limits.");
    read(*l, "max_bytes", cfg.max_bytes, "limits.");
    read(*l, "max_redirects", cfg.max_redirects, "limits.");
  }
  if (auto *c = root["cost"].as_table()) {
    read_decimal(*c, "scu_price", cfg.scu_price, "cost.");
    read_decimal(*c, "compute_hourly", cfg.compute_hourly, "cost.");
    read_decimal(*c, "deployments", cfg.deployments, "cost.");
    read_decimal(*c, "hours", cfg.hours, "cost.");
  }
  if (auto *m = root["monitor"].as_table()) {
    read(*m, "interval", cfg.monitor_interval, "monitor.");
    read(*m, "timeout", cfg.monitor_timeout, "monitor.");
  }
  if (auto *e = root["embedding"].as_table()) {
    read(*e, "kind", cfg.embedding, "embedding.");
    read(*e, "base_url", cfg.embedding_base_url, "embedding.");
    read(*e, "model", cfg.embedding_model, "embedding.");
  }
  return cfg;
}

void check_config(const Config &cfg) {
  for (const auto *p : {&cfg.attack_catalog, &cfg.data_dir, &cfg.software_list, &cfg.adversary_aliases,
                        &cfg.stopwords}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("config: path does not exist: " + *p);
  }
  auto nonneg = [](double v, const char *name) {
    if (!(v >= 0) || std::isinf(v)) throw ConfigError(std::string("config: ") + name + " must be nonnegative");
  };
  nonneg(cfg.monitor_interval, "monitor.interval");
  nonneg(cfg.monitor_timeout, "monitor.timeout");
  if (cfg.temperature) nonneg(*cfg.temperature, "backend.temperature");
  if (cfg.backend_timeout_s) nonneg(static_cast<double>(*cfg.backend_timeout_s), "backend.timeout_s");
  if (cfg.fetch_timeout_s) nonneg(static_cast<double>(*cfg.fetch_timeout_s), "limits.timeout_s");
  if (cfg.max_bytes) nonneg(static_cast<double>(*cfg.max_bytes), "limits.max_bytes");
  if (cfg.max_redirects) nonneg(static_cast<double>(*cfg.max_redirects), "limits.max_redirects");
  for (const auto &[v, name] : {std::pair{&cfg.scu_price, "cost.scu_price"}, {&cfg.compute_hourly, "cost.compute_hourly"},
                                {&cfg.deployments, "cost.deployments"}, {&cfg.hours, "cost.hours"}}) {
    if (!v->empty() && v->front() == '-') throw ConfigError(std::string("config: ") + name + " must be nonnegative");
  }
}

}  // namespace cli
