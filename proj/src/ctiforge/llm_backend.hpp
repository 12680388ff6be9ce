#pragma once

#include "ctiforge/decimal.hpp"
#include "ctiforge/generation.hpp"

#include <chrono>
#include <string>

namespace ctiforge {

struct LlmHttpConfig {
  std::string base_url = "http://127.0.0.1:8080/v1";  // POST {base_url}/chat/completions
  std::string model = "gpt-4o";
  double temperature = 0.2;
  std::string api_key;  // sent as a bearer token when nonempty
  std::chrono::seconds timeout{120};
  Decimal scu_base_rate = Decimal::parse("0.825");
  std::string system_prompt =
      "You are a cyber threat intelligence analyst. Answer in Markdown. Start every requested section with "
      "its exact level-2 heading and do not add other level-2 headings.";
};

// Chat-completions style HTTP backend. Pre-fetched source text travels in the
// prompt, which is how it satisfies FetchUrl. Each generate() call makes one
// request; retries are left to generate_section.
class LlmHttpBackend final : public GenBackend {
 public:
  explicit LlmHttpBackend(LlmHttpConfig config);

  std::string id() const override { return "llm-http"; }
  Capabilities capabilities() const override { return {Capability::FetchUrl}; }
  GenerationResult generate(const GenerationRequest &req) override;

  const LlmHttpConfig &config() const { return config_; }

 private:
  LlmHttpConfig config_;
};

// Reads CTI_FORGE_API_KEY into `config.api_key` when it is not already set.
LlmHttpConfig with_env_api_key(LlmHttpConfig config);

}  // namespace ctiforge
