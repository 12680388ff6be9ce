#pragma once

// MITRE ATT&CK enterprise technique catalog loaded from a flat CSV
// (id,name,tactics,parent_id,description; tactics pipe-delimited).

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge {

struct Technique {
  std::string id;
  std::string name;
  std::vector<std::string> tactics;
  std::optional<std::string> parent_id;
  std::string description;

  bool operator==(const Technique &) const = default;
};

enum class MatchKind { IdPattern, NameMatch };
std::string_view match_kind_name(MatchKind k);

struct TtpHit {
  std::string technique_id;
  std::string evidence;  // at most 200 bytes around the match
  MatchKind matched_by = MatchKind::IdPattern;
};

// true iff s matches T\d{4}(\.\d{3})? (case-sensitive).
bool validate_id(std::string_view s);

class Catalog {
 public:
  Catalog() = default;

  // Throws ParseError (with line number), DanglingParent or DuplicateId.
  // Leading "#" lines are comments; "# version: X" sets version().
  static Catalog load(const std::filesystem::path &path);
  static Catalog parse(std::string_view csv_text);

  const Technique *find(std::string_view id) const;
  // Throws InvalidArgument for an unknown id.
  const Technique &lookup(std::string_view id) const;
  // Case-insensitive exact name lookup.
  std::optional<std::string> id_for_name(std::string_view name) const;

  const std::map<std::string, Technique, std::less<>> &techniques() const { return techniques_; }
  // lowercase name -> id. Where several techniques share a name the lowest id
  // owns it.
  const std::map<std::string, std::string, std::less<>> &name_index() const { return name_index_; }
  const std::string &version() const { return version_; }
  std::size_t size() const { return techniques_.size(); }

  bool operator==(const Catalog &) const = default;

 private:
  std::map<std::string, Technique, std::less<>> techniques_;
  std::map<std::string, std::string, std::less<>> name_index_;
  std::string version_ = "unknown";
};

// Explicit technique ids present in `cat` plus whole-phrase,
// case-insensitive technique-name occurrences. One hit per id (IdPattern
// beats NameMatch, earlier evidence beats later), sorted by id. Names that
// are everyday words in threat reporting ("Malware", "Tool", "At", ...) are
// not name-matched; see kGenericTechniqueNames.
std::vector<TtpHit> extract_ttp_ids(std::string_view text, const Catalog &cat);

extern const std::vector<std::string_view> kGenericTechniqueNames;

// Markdown table: Tactic | Technique ID | Technique Name | Evidence, one row
// per distinct id, ordered by first tactic (kill-chain order) then id. An
// empty list renders a single "No techniques identified" row.
std::string render_mitre_table(const std::vector<TtpHit> &hits, const Catalog &cat);

// Enterprise tactics in kill-chain order.
extern const std::vector<std::string_view> kTacticOrder;

}  // namespace ctiforge
