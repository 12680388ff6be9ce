#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string store_path = "reports";
  std::string store_kind = "journal";
  std::string attack_catalog;  // empty: bundled
  std::string data_dir;
  std::string software_list;
  std::string adversary_aliases;
  std::string stopwords;

  std::string backend = "rule";
  std::string base_url;
  std::string model;
  std::optional<double> temperature;
  std::optional<long long> backend_timeout_s;

  std::optional<long long> fetch_timeout_s;
  std::optional<long long> max_bytes;
  std::optional<long long> max_redirects;

  std::string scu_price = "5.60";
  std::string compute_hourly = "0.20";
  std::string deployments = "2";
  std::string hours = "0";

  double monitor_interval = 120.0;
  double monitor_timeout = 0.0;  // 0: wait forever

  std::string embedding = "none";  // none | hashed | http
  std::string embedding_base_url;
  std::string embedding_model;
};

// Reads `path` (TOML). When `path` is empty, ./cti-forge.toml is used if it
// exists, else the defaults. Throws ConfigError.
Config load_config(const std::string &path);

// Paths that must exist and numbers that must be nonnegative.
void check_config(const Config &cfg);

}  // namespace cli
