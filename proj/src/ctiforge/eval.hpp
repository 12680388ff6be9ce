#pragma once

// Report evaluation: term-vector cosine similarity, embedding similarity,
// set accuracy and the AI-vs-manual comparison table.

#include "ctiforge/attack.hpp"
#include "ctiforge/lexicon.hpp"
#include "ctiforge/model.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge {

// NLTK's original 127-word English stopword list.
const std::vector<std::string> &bundled_stopwords();
std::vector<std::string> load_stopwords(const std::filesystem::path &path);

struct TokenizeOptions {
  bool lowercase = true;
  bool strip_stopwords = false;
  const std::vector<std::string> *stopwords = nullptr;  // nullptr: bundled list
};

// Splits on anything but letters, digits, '.', '-' and non-ASCII bytes.
// Edge dots/dashes are stripped; inner ones survive only in indicator-like
// tokens (containing a digit, or a valid domain), otherwise they split too.
std::vector<std::string> tokenize(std::string_view text, const TokenizeOptions &opts = {});

enum class WeightScheme { RawTf, TfIdf };

struct CorpusStats {
  std::size_t documents = 0;
  std::map<std::string, std::size_t, std::less<>> df;

  void add_document(const std::vector<std::string> &tokens);
};

struct TermVector {
  std::map<std::string, double, std::less<>> weights;  // no zero entries
  WeightScheme scheme = WeightScheme::RawTf;
};

// RawTf: count. TfIdf: count * ln((N + 1) / (df + 1)); terms whose weight
// comes out as zero are dropped. Throws MissingCorpusStats for TfIdf without
// stats.
TermVector term_vector(const std::vector<std::string> &tokens, WeightScheme scheme,
                       const CorpusStats *stats = nullptr);

// sum(a_i b_i) / (|a| |b|). Throws ZeroVector if either side is empty.
double cosine(const TermVector &a, const TermVector &b);

// Convenience: tokenize both texts (lowercase, stopwords stripped), RawTf.
double text_cosine(std::string_view a, std::string_view b, const std::vector<std::string> *stopwords = nullptr);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  // Longest input, in whitespace tokens, embed() accepts in one call.
  virtual std::size_t max_tokens() const = 0;
  // Unit-norm vector of dimension(). Throws ProviderError.
  virtual std::vector<double> embed(std::string_view text) = 0;
};

// Deterministic stand-in: seeded, signed feature hashing of lowercase tokens
// into `dimension` buckets, projected onto the unit sphere. Empty input maps
// to a fixed seed-dependent basis vector.
class HashedEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashedEmbeddingProvider(std::uint64_t seed = 0x5eed, std::size_t dimension = 256,
                                   std::size_t max_tokens = 512);
  std::string id() const override { return "hashed-bow"; }
  std::size_t dimension() const override { return dimension_; }
  std::size_t max_tokens() const override { return max_tokens_; }
  std::vector<double> embed(std::string_view text) override;

 private:
  std::uint64_t seed_;
  std::size_t dimension_;
  std::size_t max_tokens_;
};

struct HttpEmbeddingConfig {
  std::string base_url;  // POST {base_url}/embeddings
  std::string model;
  std::string api_key;
  std::size_t max_tokens = 512;
  std::chrono::seconds timeout{60};
};

// OpenAI-style embeddings endpoint; the reply is renormalized to unit length.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
  std::string id() const override { return "http:" + config_.model; }
  std::size_t dimension() const override { return dimension_; }
  std::size_t max_tokens() const override { return config_.max_tokens; }
  std::vector<double> embed(std::string_view text) override;

 private:
  HttpEmbeddingConfig config_;
  std::size_t dimension_ = 0;
};

// Splits text longer than the provider limit into max_tokens windows, embeds
// each, mean-pools and renormalizes.
std::vector<double> embed_document(EmbeddingProvider &provider, std::string_view text);

// Dot product of the two unit embeddings, in [-1, 1].
double embed_similarity(std::string_view a, std::string_view b, EmbeddingProvider &provider);

// |predicted ∩ reference| / |reference|. Throws EmptyReference.
double set_accuracy(const std::set<std::string> &predicted, const std::set<std::string> &reference);

enum class AptStatus { Present, Absent, NotApplicable };
std::string_view apt_status_name(AptStatus s);

struct ComparisonRow {
  std::string report_name;
  std::optional<double> ioc_score;
  std::optional<double> ttp_score;
  AptStatus apt = AptStatus::NotApplicable;
  std::size_t ioc_matched = 0, ioc_reference = 0;
  std::size_t ttp_matched = 0, ttp_reference = 0;
  std::optional<double> cosine;     // over the similarity scope
  std::optional<double> embedding;  // when a provider was supplied
};

struct CompareOptions {
  const std::vector<AdversaryGroup> *adversaries = nullptr;
  // Sections compared by the similarity scores; empty means whole documents.
  std::vector<SectionKind> similarity_scope = {SectionKind::MetadataOverview, SectionKind::MitreSummary};
  EmbeddingProvider *embeddings = nullptr;
  const std::vector<std::string> *stopwords = nullptr;  // nullptr: bundled list
};

// Body of the given sections joined, or the whole document when none of them
// is present.
std::string scoped_text(std::string_view markdown, const std::vector<SectionKind> &scope);

// IoCs are compared within "Data Extraction" and TTPs within "MITRE Summary
// Table" (whole document when the heading is missing); APT presence uses the
// whole documents.
ComparisonRow compare_reports(std::string_view report_name, std::string_view ai, std::string_view manual,
                              const Catalog &cat, const CompareOptions &opts = {});

// Report | IoC% | TTP% | APT table plus an Average row. Scores print as
// percentages with one decimal, absent ones as N/A; APT prints ✓, ✗ or N/A
// and averages over the rows where it applies.
std::string render_comparison_table(const std::vector<ComparisonRow> &rows);

// One JSON object per line.
std::string comparison_row_to_json(const ComparisonRow &row);

}  // namespace ctiforge
