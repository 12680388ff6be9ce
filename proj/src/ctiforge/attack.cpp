#include "ctiforge/attack.hpp"

#include "ctiforge/csv.hpp"
#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace ctiforge {

const std::vector<std::string_view> kTacticOrder = {
    "Reconnaissance",       "Resource Development", "Initial Access",    "Execution",
    "Persistence",          "Privilege Escalation", "Defense Evasion",   "Credential Access",
    "Discovery",            "Lateral Movement",     "Collection",        "Command and Control",
    "Exfiltration",         "Impact",
};

const std::vector<std::string_view> kGenericTechniqueNames = {
    "at",     "botnet",   "cdns",  "credentials", "dns",  "domains", "exploits",
    "firmware", "hardware", "malware", "proxy",    "server", "serverless", "software",
    "tool",   "trap",     "vulnerabilities",
};

std::string_view match_kind_name(MatchKind k) {
  return k == MatchKind::IdPattern ? "IdPattern" : "NameMatch";
}

bool validate_id(std::string_view s) {
  if (s.size() != 5 && s.size() != 9) return false;
  if (s[0] != 'T') return false;
  for (std::size_t i = 1; i < 5; ++i) {
    if (!text::is_ascii_digit(s[i])) return false;
  }
  if (s.size() == 5) return true;
  if (s[5] != '.') return false;
  for (std::size_t i = 6; i < 9; ++i) {
    if (!text::is_ascii_digit(s[i])) return false;
  }
  return true;
}

Catalog Catalog::load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot read ATT&CK catalog " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Catalog Catalog::parse(std::string_view csv_text) {
  Catalog cat;
  // Blank out comment lines so record line numbers stay true to the file.
  std::string body;
  body.reserve(csv_text.size());
  bool in_header_comments = true;
  for (const auto &line : text::split(csv_text, '\n')) {
    const std::string_view trimmed = text::trim(line);
    if (in_header_comments && trimmed.starts_with("#")) {
      const std::string_view rest = text::trim(trimmed.substr(1));
      if (text::istarts_with(rest, "version:")) cat.version_ = std::string(text::trim(rest.substr(8)));
      body.push_back('\n');
      continue;
    }
    if (!trimmed.empty()) in_header_comments = false;
    body.append(line);
    body.push_back('\n');
  }

  const auto rows = csv::parse(body);
  if (rows.empty()) fail(ErrorCode::ParseError, "line 1: missing header id,name,tactics,parent_id,description");
  const std::vector<std::string> expected = {"id", "name", "tactics", "parent_id", "description"};
  std::vector<std::string> header;
  for (const auto &f : rows.front().fields) header.push_back(text::to_lower(text::trim(f)));
  if (header != expected) {
    fail(ErrorCode::ParseError, "line " + std::to_string(rows.front().line) +
                                    ": header must be id,name,tactics,parent_id,description");
  }

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto &row = rows[r];
    const std::string where = "line " + std::to_string(row.line) + ": ";
    if (row.fields.size() != 5) {
      fail(ErrorCode::ParseError, where + "expected 5 fields, found " + std::to_string(row.fields.size()));
    }
    Technique t;
    t.id = std::string(text::trim(row.fields[0]));
    t.name = std::string(text::trim(row.fields[1]));
    if (!validate_id(t.id)) fail(ErrorCode::ParseError, where + "invalid technique id '" + t.id + "'");
    if (t.name.empty()) fail(ErrorCode::ParseError, where + "technique " + t.id + " has no name");
    for (const auto &tactic : text::split(row.fields[2], '|')) {
      const std::string_view v = text::trim(tactic);
      if (!v.empty()) t.tactics.emplace_back(v);
    }
    const std::string parent(text::trim(row.fields[3]));
    const bool is_sub = t.id.size() == 9;
    if (is_sub != !parent.empty() || (is_sub && parent != t.id.substr(0, 5))) {
      fail(ErrorCode::ParseError, where + "parent_id of " + t.id + " must be " +
                                      (is_sub ? t.id.substr(0, 5) : std::string("empty")));
    }
    if (is_sub) t.parent_id = parent;
    t.description = row.fields[4];
    if (cat.techniques_.contains(t.id)) throw Error(ErrorCode::DuplicateId, "duplicate technique id " + t.id);
    cat.techniques_.emplace(t.id, std::move(t));
  }

  for (const auto &[id, t] : cat.techniques_) {
    if (t.parent_id && !cat.techniques_.contains(*t.parent_id)) {
      throw Error(ErrorCode::DanglingParent, "technique " + id + " names missing parent " + *t.parent_id);
    }
    // Iteration is in id order, so the first claim on a name is the lowest id.
    cat.name_index_.try_emplace(text::to_lower(t.name), id);
  }
  return cat;
}

const Technique *Catalog::find(std::string_view id) const {
  const auto it = techniques_.find(id);
  return it == techniques_.end() ? nullptr : &it->second;
}

const Technique &Catalog::lookup(std::string_view id) const {
  if (const Technique *t = find(id)) return *t;
  fail(ErrorCode::InvalidArgument, "unknown technique id " + std::string(id));
}

std::optional<std::string> Catalog::id_for_name(std::string_view name) const {
  const auto it = name_index_.find(text::to_lower(text::trim(name)));
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TtpHit> extract_ttp_ids(std::string_view text_in, const Catalog &cat) {
  std::map<std::string, TtpHit, std::less<>> by_id;
  std::map<std::string, std::size_t, std::less<>> first_pos;

  auto offer = [&](std::string id, std::size_t begin, std::size_t end, MatchKind kind) {
    auto it = by_id.find(id);
    if (it != by_id.end()) {
      const bool better_kind = kind == MatchKind::IdPattern && it->second.matched_by == MatchKind::NameMatch;
      const bool same_kind_earlier = kind == it->second.matched_by && begin < first_pos[id];
      if (!better_kind && !same_kind_earlier) return;
    }
    first_pos[id] = begin;
    by_id[id] = TtpHit{id, text::snippet(text_in, begin, end), kind};
  };

  // (a) explicit ids
  for (std::size_t i = 0; i + 5 <= text_in.size(); ++i) {
    if (text_in[i] != 'T') continue;
    if (i > 0 && text::is_word_char(text_in[i - 1])) continue;
    std::size_t len = 5;
    if (!validate_id(text_in.substr(i, 5))) continue;
    if (i + 9 <= text_in.size() && validate_id(text_in.substr(i, 9))) len = 9;
    const std::size_t end = i + len;
    if (end < text_in.size() && text::is_word_char(text_in[end])) continue;
    if (len == 5 && end + 1 < text_in.size() && text_in[end] == '.' && text::is_ascii_digit(text_in[end + 1])) {
      continue;  // malformed sub-technique suffix such as T1566.1
    }
    const std::string id(text_in.substr(i, len));
    if (cat.find(id)) offer(id, i, end, MatchKind::IdPattern);
    i = end - 1;
  }

  // (b) technique names
  const std::string lower = text::to_lower(text_in);
  for (const auto &[name, id] : cat.name_index()) {
    if (std::find(kGenericTechniqueNames.begin(), kGenericTechniqueNames.end(), name) !=
        kGenericTechniqueNames.end()) {
      continue;
    }
    const auto hits = text::find_phrase(lower, name);
    if (!hits.empty()) offer(id, hits.front(), hits.front() + name.size(), MatchKind::NameMatch);
  }

  std::vector<TtpHit> out;
  out.reserve(by_id.size());
  for (auto &[id, hit] : by_id) out.push_back(std::move(hit));
  return out;
}

namespace {

std::size_t tactic_rank(const Technique &t) {
  if (t.tactics.empty()) return kTacticOrder.size() + 1;
  const auto it = std::find(kTacticOrder.begin(), kTacticOrder.end(), t.tactics.front());
  return it == kTacticOrder.end() ? kTacticOrder.size() : static_cast<std::size_t>(it - kTacticOrder.begin());
}

std::string cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') {
      out += "\\|";
    } else if (c == '\n' || c == '\r') {
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_mitre_table(const std::vector<TtpHit> &hits, const Catalog &cat) {
  std::string out = "| Tactic | Technique ID | Technique Name | Evidence |\n|---|---|---|---|\n";
  std::map<std::string, const TtpHit *, std::less<>> unique;
  for (const auto &h : hits) unique.try_emplace(h.technique_id, &h);
  if (unique.empty()) return out + "| No techniques identified | | | |\n";

  struct Row {
    std::size_t rank;
    std::string tactic;
    const Technique *technique;
    const TtpHit *hit;
  };
  std::vector<Row> rows;
  for (const auto &[id, hit] : unique) {
    const Technique &t = cat.lookup(id);
    rows.push_back({tactic_rank(t), t.tactics.empty() ? std::string("-") : t.tactics.front(), &t, hit});
  }
  std::sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.tactic != b.tactic) return a.tactic < b.tactic;
    return a.technique->id < b.technique->id;
  });
  for (const auto &r : rows) {
    out += "| " + cell(r.tactic) + " | " + r.technique->id + " | " + cell(r.technique->name) + " | " +
           cell(r.hit->evidence) + " |\n";
  }
  return out;
}

}  // namespace ctiforge
