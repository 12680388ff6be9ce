#pragma once

#include "ctiforge/generation.hpp"

namespace ctiforge {

// Deterministic, offline backend: renders every section from the structured
// extraction results in the context and ignores the prompt text. Output is
// a pure function of the context. Usage records carry zero SCU.
class RuleBackend final : public GenBackend {
 public:
  std::string id() const override { return "rule"; }
  Capabilities capabilities() const override { return {Capability::FetchUrl}; }
  GenerationResult generate(const GenerationRequest &req) override;

  static std::string render(SectionKind k, const GenerationContext &ctx);
};

}  // namespace ctiforge
