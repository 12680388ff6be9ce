#pragma once

// Synthetic threat-report corpus with planted indicators, and an independent
// regex-based reference extractor for cross-checking.

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace testsupport {

using KindValue = std::pair<std::string, std::string>;  // ("ipv4", "10.0.0.1")

struct PlantedIoc {
  std::string kind;
  std::string value;     // normalized form the extractor must return
  std::string rendered;  // as written into the document
  bool defanged = false;
  // False for values that also occur inside another planted indicator (URL
  // hosts), where the reported defang flag depends on which copy comes first.
  bool check_flag = true;
};

struct CorpusDoc {
  std::string text;
  std::vector<PlantedIoc> planted;
  std::set<KindValue> expected() const;
};

struct CorpusSpec {
  std::uint64_t seed = 20240601;
  int documents = 200;
  int indicators = 1000;
  double defanged_fraction = 0.30;
};

std::vector<CorpusDoc> make_corpus(const CorpusSpec &spec);

inline const std::vector<std::string> kIocKinds = {"cve", "domain", "email", "ipv4", "ipv6",
                                                   "md5", "sha1",   "sha256", "url"};

// Reference extractor built on std::regex and inet_pton: refang, then match
// kinds in precedence order with masking, re-emit URL hosts.
std::set<KindValue> regex_oracle(std::string_view text);

}  // namespace testsupport
