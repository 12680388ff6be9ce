#pragma once

// Named-entity word lists used by the rule backend, tag generation and the
// evaluator's APT column: tool/malware names, adversary groups with aliases,
// and industry sectors.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge {

struct AdversaryGroup {
  std::string name;
  std::vector<std::string> aliases;
};

struct PhraseHit {
  std::string phrase;  // list entry as written in the list
  std::size_t pos = 0;  // first occurrence in the searched text
};

// One entry per line; blank lines and '#' comments skipped.
std::vector<std::string> load_word_list(const std::filesystem::path &path);
// CSV with header name,aliases (aliases pipe-delimited).
std::vector<AdversaryGroup> load_adversaries(const std::filesystem::path &path);

// Entries of `phrases` occurring as whole, case-insensitive phrases in
// `text`, ordered by first occurrence (ties: longer phrase first). An entry
// contained inside a longer matched entry at the same place is not reported.
std::vector<PhraseHit> find_phrases(std::string_view text, const std::vector<std::string> &phrases);

// Canonical names of groups mentioned by name or alias, by first occurrence.
std::vector<PhraseHit> find_adversaries(std::string_view text, const std::vector<AdversaryGroup> &groups);

const std::vector<std::string> &default_industries();

// CTI_FORGE_DATA_DIR when set, else the data directory of the source tree.
std::filesystem::path default_data_dir();

struct Lexicon {
  std::vector<std::string> software;
  std::vector<AdversaryGroup> adversaries;
  std::vector<std::string> industries = default_industries();

  // software.txt and adversaries.csv from `data_dir`.
  static Lexicon load(const std::filesystem::path &data_dir = default_data_dir());
};

}  // namespace ctiforge
