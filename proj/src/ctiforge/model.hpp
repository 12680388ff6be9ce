#pragma once

// Domain types shared by every stage: threat types, the fixed seven-section
// report schema, the trigger request and generated sections.

#include "ctiforge/decimal.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge {

enum class ThreatType { Campaign, ThreatActor, Vulnerability, MalwareTool };

inline constexpr std::array<ThreatType, 4> kAllThreatTypes = {
    ThreatType::Campaign, ThreatType::ThreatActor, ThreatType::Vulnerability,
    ThreatType::MalwareTool};

// "Campaign", "Threat Actor", "Vulnerability", "Malware/Tool".
std::string_view canonical_name(ThreatType t);

// Case-insensitive over the canonical names plus the aliases "malware",
// "tool" and "actor". Throws UnknownThreatType.
ThreatType parse_threat_type(std::string_view s);

enum class SectionKind : int {
  MetadataOverview = 1,
  MitreSummary = 2,
  DataExtraction = 3,
  ToolsMalware = 4,
  DefenseRecommendations = 5,
  References = 6,
  Tags = 7,
};

inline constexpr std::array<SectionKind, 7> kAllSections = {
    SectionKind::MetadataOverview,       SectionKind::MitreSummary,
    SectionKind::DataExtraction,         SectionKind::ToolsMalware,
    SectionKind::DefenseRecommendations, SectionKind::References,
    SectionKind::Tags};

constexpr int ordinal(SectionKind k) { return static_cast<int>(k); }
SectionKind section_from_ordinal(int ordinal);

// Canonical level-2 heading line, e.g. "## MITRE Summary Table".
std::string_view heading(SectionKind k);
// Heading text without the "## " marker.
std::string_view section_title(SectionKind k);

struct IntelSource {
  enum class Kind { Url, File, Inline };
  Kind kind = Kind::Inline;
  std::string value;
};

// http(s) URLs become Url sources, other "scheme://" strings are rejected,
// paths to existing regular files become File sources, anything else is
// inline text. Throws InvalidIntelSource for empty input or a bad scheme.
IntelSource parse_intel_source(std::string_view s);

// Returns `s` unchanged when it matches [A-Za-z0-9._-]+\.md. Throws
// InvalidFileName naming the violated rule.
std::string validate_file_name(std::string_view s);

struct IntelRequest {
  IntelSource intel;
  ThreatType threat_type = ThreatType::Campaign;
  std::string file_name;
};

// Builds and validates a request from raw user input; the error is the first
// failing core validation.
IntelRequest make_request(std::string_view intel_info, std::string_view threat_type,
                          std::string_view file_name);

// Trigger payload: {"intelInfo": "...", "threatType": "...", "fileName": "..."}.
IntelRequest request_from_json(std::string_view json);
std::string request_to_json(const IntelRequest &req);

struct UsageRecord {
  std::size_t prompt_chars = 0;
  std::size_t completion_chars = 0;
  Decimal scu_estimate;
  double wall_seconds = 0.0;
};

// One NDJSON line: {"prompt_chars":..,"completion_chars":..,"scu_estimate":..,"wall_seconds":..}
std::string usage_to_json(const UsageRecord &u);
UsageRecord usage_from_json(std::string_view line);
std::vector<UsageRecord> usages_from_ndjson(std::string_view text);

struct GenerationMeta {
  std::string backend_id;
  std::string prompt_id;
  int attempts = 0;
  UsageRecord usage;
  double wall_seconds = 0.0;
};

struct ReportSection {
  SectionKind kind = SectionKind::MetadataOverview;
  std::string body;
  GenerationMeta meta;
};

struct CtiReport {
  std::string file_name;
  ThreatType threat_type = ThreatType::Campaign;
  std::vector<ReportSection> sections;
  std::string merged;
};

}  // namespace ctiforge
