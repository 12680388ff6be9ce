#include "ctiforge/lexicon.hpp"

#include "ctiforge/csv.hpp"
#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#ifndef CTIFORGE_DATA_DIR
#define CTIFORGE_DATA_DIR "data"
#endif

namespace ctiforge {

namespace {

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> load_word_list(const std::filesystem::path &path) {
  std::vector<std::string> out;
  for (const auto &line : text::split(read_file(path), '\n')) {
    const std::string_view v = text::trim(line);
    if (v.empty() || v.starts_with("#")) continue;
    out.emplace_back(v);
  }
  return out;
}

std::vector<AdversaryGroup> load_adversaries(const std::filesystem::path &path) {
  std::string body;
  for (const auto &line : text::split(read_file(path), '\n')) {
    if (!text::trim(line).starts_with("#")) body += line;
    body.push_back('\n');
  }
  const auto rows = csv::parse(body);
  if (rows.empty() || rows.front().fields.size() != 2 || text::trim(rows.front().fields[0]) != "name") {
    fail(ErrorCode::ParseError, path.string() + ": header must be name,aliases");
  }
  std::vector<AdversaryGroup> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &row = rows[i];
    if (row.fields.size() != 2 || text::trim(row.fields[0]).empty()) {
      fail(ErrorCode::ParseError, path.string() + ": line " + std::to_string(row.line) + ": expected name,aliases");
    }
    AdversaryGroup g;
    g.name = std::string(text::trim(row.fields[0]));
    for (const auto &alias : text::split(row.fields[1], '|')) {
      const std::string_view a = text::trim(alias);
      if (!a.empty()) g.aliases.emplace_back(a);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<PhraseHit> find_phrases(std::string_view text_in, const std::vector<std::string> &phrases) {
  const std::string lower = text::to_lower(text_in);
  struct Candidate {
    std::size_t pos, end;
    const std::string *phrase;
  };
  std::vector<Candidate> all;
  for (const auto &p : phrases) {
    const std::string key = text::to_lower(p);
    for (std::size_t pos : text::find_phrase(lower, key)) all.push_back({pos, pos + key.size(), &p});
  }
  std::sort(all.begin(), all.end(), [](const Candidate &a, const Candidate &b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    if (a.end != b.end) return a.end > b.end;
    return *a.phrase < *b.phrase;
  });
  std::vector<PhraseHit> out;
  std::vector<const std::string *> seen;
  std::size_t covered_until = 0;
  for (const auto &c : all) {
    if (c.pos < covered_until && c.end <= covered_until) continue;  // inside a longer match
    covered_until = std::max(covered_until, c.end);
    if (std::find(seen.begin(), seen.end(), c.phrase) != seen.end()) continue;
    seen.push_back(c.phrase);
    out.push_back({*c.phrase, c.pos});
  }
  return out;
}

std::vector<PhraseHit> find_adversaries(std::string_view text_in, const std::vector<AdversaryGroup> &groups) {
  std::vector<std::string> names;
  std::map<std::string, std::string> canonical;
  for (const auto &g : groups) {
    names.push_back(g.name);
    canonical.emplace(g.name, g.name);
    for (const auto &a : g.aliases) {
      names.push_back(a);
      canonical.emplace(a, g.name);
    }
  }
  std::vector<PhraseHit> out;
  for (const auto &hit : find_phrases(text_in, names)) {
    const std::string &name = canonical.at(hit.phrase);
    const bool dup = std::any_of(out.begin(), out.end(), [&](const PhraseHit &h) { return h.phrase == name; });
    if (!dup) out.push_back({name, hit.pos});
  }
  return out;
}

const std::vector<std::string> &default_industries() {
  static const std::vector<std::string> kIndustries = {
      "aerospace",      "agriculture",    "automotive",     "aviation",        "banking",
      "construction",   "critical infrastructure",          "cryptocurrency",  "defense",
      "education",      "energy",         "finance",        "financial services",
      "government",     "healthcare",     "hospitality",    "insurance",       "legal",
      "logistics",      "manufacturing",  "maritime",       "media",           "mining",
      "non-profit",     "oil and gas",    "pharmaceutical", "retail",          "semiconductor",
      "shipping",       "technology",     "telecommunications",                "transportation",
      "utilities",
  };
  return kIndustries;
}

std::filesystem::path default_data_dir() {
  if (const char *env = std::getenv("CTI_FORGE_DATA_DIR"); env && *env) return env;
  return CTIFORGE_DATA_DIR;
}

Lexicon Lexicon::load(const std::filesystem::path &data_dir) {
  Lexicon lex;
  lex.software = load_word_list(data_dir / "software.txt");
  lex.adversaries = load_adversaries(data_dir / "adversaries.csv");
  return lex;
}

}  // namespace ctiforge
