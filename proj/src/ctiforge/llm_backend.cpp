#include "ctiforge/llm_backend.hpp"

#include "ctiforge/cost.hpp"
#include "ctiforge/errors.hpp"
#include "ctiforge/ingest.hpp"
#include "ctiforge/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>

namespace ctiforge {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // "/v1/chat/completions"
};

Endpoint endpoint_for(const std::string &base_url) {
  const auto sep = base_url.find("://");
  if (sep == std::string::npos) fail(ErrorCode::InvalidArgument, "backend base_url must be an http(s) URL");
  const std::string scheme = text::to_lower(std::string_view(base_url).substr(0, sep));
  if (scheme != "http" && scheme != "https") fail(ErrorCode::InvalidArgument, "backend base_url must be http(s)");
  const auto slash = base_url.find('/', sep + 3);
  Endpoint e;
  e.origin = base_url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  e.path = prefix + "/chat/completions";
  return e;
}

}  // namespace

LlmHttpBackend::LlmHttpBackend(LlmHttpConfig config) : config_(std::move(config)) {
  endpoint_for(config_.base_url);
  if (config_.temperature < 0) fail(ErrorCode::InvalidArgument, "temperature must be nonnegative");
}

GenerationResult LlmHttpBackend::generate(const GenerationRequest &req) {
  const Endpoint ep = endpoint_for(config_.base_url);
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array({
      {{"role", "system"}, {"content", config_.system_prompt}},
      {{"role", "user"}, {"content", req.prompt}},
  });
  body["temperature"] = config_.temperature;

  httplib::Client client(ep.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers = {{"User-Agent", user_agent()}};
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!res) fail(ErrorCode::BackendError, "llm-http request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    fail(ErrorCode::BackendError, "llm-http returned HTTP " + std::to_string(res->status) + ": " +
                                      res->body.substr(0, 200));
  }

  std::string content;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::BackendError, std::string("llm-http response lacks choices[0].message.content: ") + e.what());
  }

  GenerationResult r;
  r.body = std::move(content);
  r.usage.prompt_chars = config_.system_prompt.size() + req.prompt.size();
  r.usage.completion_chars = r.body.size();
  // Only assistant-profile calls are SCU-billed; flow and tags calls run on
  // hourly-billed deployments.
  if (req.profile == Profile::Assistant) r.usage.scu_estimate = estimate_scu(r.usage.prompt_chars, config_.scu_base_rate);
  r.usage.wall_seconds = wall;
  return r;
}

LlmHttpConfig with_env_api_key(LlmHttpConfig config) {
  if (config.api_key.empty()) {
    if (const char *key = std::getenv("CTI_FORGE_API_KEY")) config.api_key = key;
  }
  return config;
}

}  // namespace ctiforge
