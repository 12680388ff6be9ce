#include "ctiforge/model.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <system_error>

namespace ctiforge {

using json = nlohmann::json;

std::string_view canonical_name(ThreatType t) {
  switch (t) {
    case ThreatType::Campaign: return "Campaign";
    case ThreatType::ThreatActor: return "Threat Actor";
    case ThreatType::Vulnerability: return "Vulnerability";
    case ThreatType::MalwareTool: return "Malware/Tool";
  }
  return "Campaign";
}

ThreatType parse_threat_type(std::string_view s) {
  const std::string key = text::to_lower(text::trim(s));
  for (ThreatType t : kAllThreatTypes) {
    if (key == text::to_lower(canonical_name(t))) return t;
  }
  if (key == "malware" || key == "tool") return ThreatType::MalwareTool;
  if (key == "actor") return ThreatType::ThreatActor;
  throw Error(ErrorCode::UnknownThreatType, "unknown threat type: '" + std::string(s) +
                                                "' (expected Campaign, Threat Actor, "
                                                "Vulnerability or Malware/Tool)");
}

SectionKind section_from_ordinal(int ord) {
  if (ord < 1 || ord > 7) fail(ErrorCode::InvalidArgument, "section ordinal out of range");
  return static_cast<SectionKind>(ord);
}

std::string_view heading(SectionKind k) {
  switch (k) {
    case SectionKind::MetadataOverview: return "## Metadata and Overview";
    case SectionKind::MitreSummary: return "## MITRE Summary Table";
    case SectionKind::DataExtraction: return "## Data Extraction";
    case SectionKind::ToolsMalware: return "## Tools and Malware";
    case SectionKind::DefenseRecommendations: return "## Defense Recommendations";
    case SectionKind::References: return "## References";
    case SectionKind::Tags: return "## Tags";
  }
  return "";
}

std::string_view section_title(SectionKind k) { return heading(k).substr(3); }

IntelSource parse_intel_source(std::string_view raw) {
  const std::string_view s = text::trim(raw);
  if (s.empty()) fail(ErrorCode::InvalidIntelSource, "intel source is empty");

  // Scheme-looking prefix: [A-Za-z][A-Za-z0-9+.-]*://
  std::size_t i = 0;
  if (text::is_ascii_alpha(s[0])) {
    i = 1;
    while (i < s.size() && (text::is_ascii_alnum(s[i]) || s[i] == '+' || s[i] == '.' || s[i] == '-')) ++i;
  }
  if (i > 0 && s.substr(i).starts_with("://")) {
    const std::string scheme = text::to_lower(s.substr(0, i));
    if (scheme != "http" && scheme != "https") {
      fail(ErrorCode::InvalidIntelSource, "unsupported URL scheme '" + scheme + "' (http or https only)");
    }
    const std::string_view rest = s.substr(i + 3);
    const auto host_end = rest.find_first_of("/?#");
    if (rest.substr(0, host_end).empty()) fail(ErrorCode::InvalidIntelSource, "URL has no host");
    return {IntelSource::Kind::Url, std::string(s)};
  }

  std::error_code ec;
  if (s.size() < 4096 && s.find('\n') == std::string_view::npos &&
      std::filesystem::is_regular_file(std::filesystem::path(s), ec)) {
    return {IntelSource::Kind::File, std::string(s)};
  }
  return {IntelSource::Kind::Inline, std::string(raw)};
}

std::string validate_file_name(std::string_view s) {
  auto reject = [&](const std::string &rule) {
    throw Error(ErrorCode::InvalidFileName, "invalid file name '" + std::string(s) + "': " + rule);
  };
  if (s.empty()) reject("must not be empty");
  if (s.find('/') != std::string_view::npos || s.find('\\') != std::string_view::npos) {
    reject("must not contain path separators");
  }
  if (s.size() <= 3 || !s.ends_with(".md")) reject("must end in .md with a nonempty stem");
  for (char c : s) {
    if (!(text::is_ascii_alnum(c) || c == '.' || c == '_' || c == '-')) {
      reject("only letters, digits, '.', '_' and '-' are allowed");
    }
  }
  return std::string(s);
}

IntelRequest make_request(std::string_view intel_info, std::string_view threat_type,
                          std::string_view file_name) {
  IntelRequest req;
  req.intel = parse_intel_source(intel_info);
  req.threat_type = parse_threat_type(threat_type);
  req.file_name = validate_file_name(file_name);
  return req;
}

IntelRequest request_from_json(std::string_view payload) {
  json doc;
  try {
    doc = json::parse(payload);
  } catch (const json::exception &e) {
    fail(ErrorCode::ValidationFailed, std::string("request is not valid JSON: ") + e.what());
  }
  auto field = [&](const char *name) -> std::string {
    if (!doc.is_object() || !doc.contains(name) || !doc[name].is_string()) {
      fail(ErrorCode::ValidationFailed, std::string("request is missing string field '") + name + "'");
    }
    return doc[name].get<std::string>();
  };
  return make_request(field("intelInfo"), field("threatType"), field("fileName"));
}

std::string request_to_json(const IntelRequest &req) {
  nlohmann::ordered_json doc;
  doc["intelInfo"] = req.intel.value;
  doc["threatType"] = canonical_name(req.threat_type);
  doc["fileName"] = req.file_name;
  return doc.dump();
}

std::string usage_to_json(const UsageRecord &u) {
  nlohmann::ordered_json doc;
  doc["prompt_chars"] = u.prompt_chars;
  doc["completion_chars"] = u.completion_chars;
  doc["scu_estimate"] = u.scu_estimate.to_double();
  doc["wall_seconds"] = u.wall_seconds;
  return doc.dump();
}

UsageRecord usage_from_json(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception &e) {
    fail(ErrorCode::ParseError, std::string("usage record is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::ParseError, "usage record must be a JSON object");
  UsageRecord u;
  auto count = [&](const char *name) -> std::size_t {
    if (!doc.contains(name)) return 0;
    if (!doc[name].is_number_unsigned() && !(doc[name].is_number_integer() && doc[name].get<long long>() >= 0)) {
      fail(ErrorCode::ParseError, std::string("usage field '") + name + "' must be a nonnegative integer");
    }
    return doc[name].get<std::size_t>();
  };
  u.prompt_chars = count("prompt_chars");
  u.completion_chars = count("completion_chars");
  if (doc.contains("scu_estimate")) {
    const auto &v = doc["scu_estimate"];
    if (v.is_string()) {
      u.scu_estimate = Decimal::parse(v.get<std::string>());
    } else if (v.is_number()) {
      u.scu_estimate = Decimal::from_double(v.get<double>());
    } else {
      fail(ErrorCode::ParseError, "usage field 'scu_estimate' must be a number");
    }
  }
  if (doc.contains("wall_seconds")) {
    if (!doc["wall_seconds"].is_number()) fail(ErrorCode::ParseError, "usage field 'wall_seconds' must be a number");
    u.wall_seconds = doc["wall_seconds"].get<double>();
  }
  if (u.scu_estimate.is_negative() || u.wall_seconds < 0) {
    fail(ErrorCode::ParseError, "usage fields must be nonnegative");
  }
  return u;
}

std::vector<UsageRecord> usages_from_ndjson(std::string_view input) {
  std::vector<UsageRecord> out;
  for (const auto &line : text::split(input, '\n')) {
    if (text::trim(line).empty()) continue;
    out.push_back(usage_from_json(line));
  }
  return out;
}

}  // namespace ctiforge
