#include "ctiforge/eval.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/generation.hpp"
#include "ctiforge/ingest.hpp"
#include "ctiforge/ioc.hpp"
#include "ctiforge/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace ctiforge {

const std::vector<std::string> &bundled_stopwords() {
  static const std::vector<std::string> kWords = {
      "i",       "me",      "my",      "myself",  "we",         "our",     "ours",   "ourselves", "you",
      "your",    "yours",   "yourself", "yourselves", "he",      "him",     "his",    "himself",   "she",
      "her",     "hers",    "herself", "it",      "its",        "itself",  "they",   "them",      "their",
      "theirs",  "themselves", "what", "which",   "who",        "whom",    "this",   "that",      "these",
      "those",   "am",      "is",      "are",     "was",        "were",    "be",     "been",      "being",
      "have",    "has",     "had",     "having",  "do",         "does",    "did",    "doing",     "a",
      "an",      "the",     "and",     "but",     "if",         "or",      "because", "as",       "until",
      "while",   "of",      "at",      "by",      "for",        "with",    "about",  "against",   "between",
      "into",    "through", "during",  "before",  "after",      "above",   "below",  "to",        "from",
      "up",      "down",    "in",      "out",     "on",         "off",     "over",   "under",     "again",
      "further", "then",    "once",    "here",    "there",      "when",    "where",  "why",       "how",
      "all",     "any",     "both",    "each",    "few",        "more",    "most",   "other",     "some",
      "such",    "no",      "nor",     "not",     "only",       "own",     "same",   "so",        "than",
      "too",     "very",    "s",       "t",       "can",        "will",    "just",   "don",       "should",
      "now",
  };
  return kWords;
}

std::vector<std::string> load_stopwords(const std::filesystem::path &path) {
  std::vector<std::string> out;
  for (auto &w : load_word_list(path)) out.push_back(text::to_lower(w));
  return out;
}

namespace {

bool token_char(char c) { return text::is_word_char(c) || c == '.' || c == '-'; }

void emit(std::string_view tok, const TokenizeOptions &opts, const std::unordered_set<std::string_view> &stop,
          std::vector<std::string> &out) {
  while (!tok.empty() && (tok.front() == '.' || tok.front() == '-')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == '.' || tok.back() == '-')) tok.remove_suffix(1);
  if (tok.empty()) return;
  std::string t = opts.lowercase ? text::to_lower(tok) : std::string(tok);
  if (opts.strip_stopwords && stop.contains(text::to_lower(t))) return;
  out.push_back(std::move(t));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s, const TokenizeOptions &opts) {
  const auto &words = opts.stopwords ? *opts.stopwords : bundled_stopwords();
  std::unordered_set<std::string_view> stop;
  if (opts.strip_stopwords) stop = {words.begin(), words.end()};

  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!token_char(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && token_char(s[j])) ++j;
    std::string_view run = s.substr(i, j - i);
    i = j;
    while (!run.empty() && (run.front() == '.' || run.front() == '-')) run.remove_prefix(1);
    while (!run.empty() && (run.back() == '.' || run.back() == '-')) run.remove_suffix(1);
    if (run.empty()) continue;
    const bool has_inner = run.find_first_of(".-") != std::string_view::npos;
    const bool indicator_like = std::any_of(run.begin(), run.end(), text::is_ascii_digit) ||
                                (run.find('.') != std::string_view::npos && is_valid_domain(text::to_lower(run)));
    if (!has_inner || indicator_like) {
      emit(run, opts, stop, out);
      continue;
    }
    std::size_t k = 0;
    while (k <= run.size()) {
      const std::size_t next = run.find_first_of(".-", k);
      emit(run.substr(k, next == std::string_view::npos ? std::string_view::npos : next - k), opts, stop, out);
      if (next == std::string_view::npos) break;
      k = next + 1;
    }
  }
  return out;
}

void CorpusStats::add_document(const std::vector<std::string> &tokens) {
  ++documents;
  std::set<std::string_view> seen(tokens.begin(), tokens.end());
  for (auto t : seen) ++df[std::string(t)];
}

TermVector term_vector(const std::vector<std::string> &tokens, WeightScheme scheme, const CorpusStats *stats) {
  if (scheme == WeightScheme::TfIdf && !stats) {
    fail(ErrorCode::MissingCorpusStats, "TF-IDF weighting needs corpus document frequencies");
  }
  TermVector v;
  v.scheme = scheme;
  for (const auto &t : tokens) v.weights[t] += 1.0;
  if (scheme == WeightScheme::TfIdf) {
    const double n = static_cast<double>(stats->documents);
    for (auto it = v.weights.begin(); it != v.weights.end();) {
      const auto df_it = stats->df.find(it->first);
      const double df = df_it == stats->df.end() ? 0.0 : static_cast<double>(df_it->second);
      it->second *= std::log((n + 1.0) / (df + 1.0));
      if (it->second <= 0.0) {
        it = v.weights.erase(it);
      } else {
        ++it;
      }
    }
  }
  return v;
}

double cosine(const TermVector &a, const TermVector &b) {
  if (a.weights.empty() || b.weights.empty()) fail(ErrorCode::ZeroVector, "cosine of an empty term vector");
  auto norm = [](const TermVector &v) {
    double s = 0.0;
    for (const auto &[t, w] : v.weights) s += w * w;
    return std::sqrt(s);
  };
  const TermVector &small = a.weights.size() <= b.weights.size() ? a : b;
  const TermVector &large = &small == &a ? b : a;
  double dot = 0.0;
  for (const auto &[t, w] : small.weights) {
    const auto it = large.weights.find(t);
    if (it != large.weights.end()) dot += w * it->second;
  }
  if (dot == 0.0) return 0.0;
  const double r = dot / (norm(a) * norm(b));
  return std::clamp(r, 0.0, 1.0);
}

double text_cosine(std::string_view a, std::string_view b, const std::vector<std::string> *stopwords) {
  TokenizeOptions opts;
  opts.strip_stopwords = true;
  opts.stopwords = stopwords;
  return cosine(term_vector(tokenize(a, opts), WeightScheme::RawTf),
                term_vector(tokenize(b, opts), WeightScheme::RawTf));
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::uint64_t seed, std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Final avalanche so nearby seeds and short tokens spread across buckets.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

void normalize(std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double n = std::sqrt(s);
  if (n == 0.0) return;
  for (double &x : v) x /= n;
}

}  // namespace

HashedEmbeddingProvider::HashedEmbeddingProvider(std::uint64_t seed, std::size_t dimension, std::size_t max_tokens)
    : seed_(seed), dimension_(dimension), max_tokens_(max_tokens) {
  if (dimension_ == 0 || max_tokens_ == 0) fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

std::vector<double> HashedEmbeddingProvider::embed(std::string_view s) {
  std::vector<double> v(dimension_, 0.0);
  for (const auto &tok : tokenize(s)) {
    const std::uint64_t h = fnv1a(seed_, tok);
    v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
  }
  const bool zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  if (zero) {
    v[fnv1a(seed_, "") % dimension_] = 1.0;
    return v;
  }
  normalize(v);
  return v;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {
  if (config_.base_url.find("://") == std::string::npos) {
    fail(ErrorCode::InvalidArgument, "embedding base_url must be an http(s) URL");
  }
}

std::vector<double> HttpEmbeddingProvider::embed(std::string_view s) {
  const auto sep = config_.base_url.find("://");
  const auto slash = config_.base_url.find('/', sep + 3);
  const std::string origin = config_.base_url.substr(0, slash);
  std::string path = slash == std::string::npos ? "" : config_.base_url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/embeddings";

  httplib::Client client(origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers = {{"User-Agent", user_agent()}};
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  nlohmann::ordered_json body;
  body["model"] = config_.model;
  body["input"] = std::string(s);
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) fail(ErrorCode::ProviderError, "embedding request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) fail(ErrorCode::ProviderError, "embedding endpoint returned HTTP " + std::to_string(res->status));
  std::vector<double> v;
  try {
    v = nlohmann::json::parse(res->body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorCode::ProviderError, std::string("malformed embedding response: ") + e.what());
  }
  if (v.empty()) fail(ErrorCode::ProviderError, "embedding endpoint returned an empty vector");
  if (dimension_ == 0) dimension_ = v.size();
  if (v.size() != dimension_) fail(ErrorCode::ProviderError, "embedding dimension changed between calls");
  normalize(v);
  return v;
}

std::vector<double> embed_document(EmbeddingProvider &provider, std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text::is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !text::is_space(s[i])) ++i;
    if (i > start) words.push_back(s.substr(start, i - start));
  }
  const std::size_t limit = std::max<std::size_t>(1, provider.max_tokens());
  if (words.size() <= limit) return provider.embed(s);

  std::vector<double> pooled;
  std::size_t chunks = 0;
  for (std::size_t w = 0; w < words.size(); w += limit) {
    std::string chunk;
    for (std::size_t k = w; k < std::min(words.size(), w + limit); ++k) {
      if (!chunk.empty()) chunk.push_back(' ');
      chunk.append(words[k]);
    }
    const auto v = provider.embed(chunk);
    if (pooled.empty()) pooled.assign(v.size(), 0.0);
    if (v.size() != pooled.size()) fail(ErrorCode::ProviderError, "embedding dimension changed between chunks");
    for (std::size_t k = 0; k < v.size(); ++k) pooled[k] += v[k];
    ++chunks;
  }
  for (double &x : pooled) x /= static_cast<double>(chunks);
  normalize(pooled);
  return pooled;
}

double embed_similarity(std::string_view a, std::string_view b, EmbeddingProvider &provider) {
  const auto va = embed_document(provider, a);
  const auto vb = embed_document(provider, b);
  if (va.size() != vb.size()) fail(ErrorCode::ProviderError, "embedding dimensions differ");
  double dot = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) dot += va[i] * vb[i];
  return std::clamp(dot, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

double set_accuracy(const std::set<std::string> &predicted, const std::set<std::string> &reference) {
  if (reference.empty()) fail(ErrorCode::EmptyReference, "accuracy needs a nonempty reference set");
  std::size_t hit = 0;
  for (const auto &r : reference) hit += predicted.contains(r) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(reference.size());
}

std::string_view apt_status_name(AptStatus s) {
  switch (s) {
    case AptStatus::Present: return "Present";
    case AptStatus::Absent: return "Absent";
    case AptStatus::NotApplicable: return "NotApplicable";
  }
  return "NotApplicable";
}

std::string scoped_text(std::string_view markdown, const std::vector<SectionKind> &scope) {
  std::string out;
  bool any = false;
  for (SectionKind k : scope) {
    if (auto body = section_text(markdown, k)) {
      any = true;
      if (!out.empty()) out.push_back('\n');
      out += *body;
    }
  }
  return any ? out : std::string(markdown);
}

namespace {

std::set<std::string> ioc_set(std::string_view doc) {
  std::set<std::string> out;
  for (const auto &i : extract_iocs(doc)) out.insert(std::string(kind_name(i.kind)) + ":" + i.value);
  return out;
}

std::set<std::string> ttp_set(std::string_view doc, const Catalog &cat) {
  std::set<std::string> out;
  for (const auto &h : extract_ttp_ids(doc, cat)) out.insert(h.technique_id);
  return out;
}

std::size_t overlap(const std::set<std::string> &a, const std::set<std::string> &b) {
  std::size_t n = 0;
  for (const auto &x : b) n += a.contains(x) ? 1 : 0;
  return n;
}

std::string percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", ratio * 100.0);
  return buf;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

ComparisonRow compare_reports(std::string_view report_name, std::string_view ai, std::string_view manual,
                              const Catalog &cat, const CompareOptions &opts) {
  ComparisonRow row;
  row.report_name = std::string(report_name);

  const auto ref_iocs = ioc_set(scoped_text(manual, {SectionKind::DataExtraction}));
  const auto ai_iocs = ioc_set(scoped_text(ai, {SectionKind::DataExtraction}));
  row.ioc_reference = ref_iocs.size();
  row.ioc_matched = overlap(ai_iocs, ref_iocs);
  if (!ref_iocs.empty()) row.ioc_score = set_accuracy(ai_iocs, ref_iocs);

  const auto ref_ttps = ttp_set(scoped_text(manual, {SectionKind::MitreSummary}), cat);
  const auto ai_ttps = ttp_set(scoped_text(ai, {SectionKind::MitreSummary}), cat);
  row.ttp_reference = ref_ttps.size();
  row.ttp_matched = overlap(ai_ttps, ref_ttps);
  if (!ref_ttps.empty()) row.ttp_score = set_accuracy(ai_ttps, ref_ttps);

  if (opts.adversaries) {
    std::set<std::string> manual_groups, ai_groups;
    for (const auto &h : find_adversaries(manual, *opts.adversaries)) manual_groups.insert(h.phrase);
    for (const auto &h : find_adversaries(ai, *opts.adversaries)) ai_groups.insert(h.phrase);
    if (manual_groups.empty()) {
      row.apt = AptStatus::NotApplicable;
    } else {
      row.apt = overlap(ai_groups, manual_groups) > 0 ? AptStatus::Present : AptStatus::Absent;
    }
  }

  const std::string a_scope = opts.similarity_scope.empty() ? std::string(ai) : scoped_text(ai, opts.similarity_scope);
  const std::string m_scope =
      opts.similarity_scope.empty() ? std::string(manual) : scoped_text(manual, opts.similarity_scope);
  try {
    row.cosine = text_cosine(a_scope, m_scope, opts.stopwords);
  } catch (const Error &e) {
    if (e.code() != ErrorCode::ZeroVector) throw;
  }
  if (opts.embeddings) row.embedding = embed_similarity(a_scope, m_scope, *opts.embeddings);
  return row;
}

std::string render_comparison_table(const std::vector<ComparisonRow> &rows) {
  std::string out = "| Report | IoC% | TTP% | APT |\n|---|---|---|---|\n";
  double ioc_sum = 0, ttp_sum = 0;
  std::size_t ioc_n = 0, ttp_n = 0, apt_yes = 0, apt_n = 0;
  for (const auto &r : rows) {
    std::string name = r.report_name;
    std::replace(name.begin(), name.end(), '|', '/');
    out += "| " + name + " | " + (r.ioc_score ? percent(*r.ioc_score) : "N/A") + " | " +
           (r.ttp_score ? percent(*r.ttp_score) : "N/A") + " | ";
    switch (r.apt) {
      case AptStatus::Present: out += "✓"; break;
      case AptStatus::Absent: out += "✗"; break;
      case AptStatus::NotApplicable: out += "N/A"; break;
    }
    out += " |\n";
    if (r.ioc_score) {
      ioc_sum += *r.ioc_score;
      ++ioc_n;
    }
    if (r.ttp_score) {
      ttp_sum += *r.ttp_score;
      ++ttp_n;
    }
    if (r.apt != AptStatus::NotApplicable) {
      ++apt_n;
      apt_yes += r.apt == AptStatus::Present ? 1 : 0;
    }
  }
  auto avg = [](double sum, std::size_t n) {
    return n == 0 ? std::string("N/A") : percent(sum / static_cast<double>(n)) + "%";
  };
  out += "| Average | " + avg(ioc_sum, ioc_n) + " | " + avg(ttp_sum, ttp_n) + " | " +
         avg(static_cast<double>(apt_yes), apt_n) + " |\n";
  return out;
}

std::string comparison_row_to_json(const ComparisonRow &row) {
  nlohmann::ordered_json j;
  j["report"] = row.report_name;
  j["ioc_score"] = row.ioc_score ? nlohmann::ordered_json(round3(*row.ioc_score)) : nlohmann::ordered_json(nullptr);
  j["ttp_score"] = row.ttp_score ? nlohmann::ordered_json(round3(*row.ttp_score)) : nlohmann::ordered_json(nullptr);
  j["apt"] = apt_status_name(row.apt);
  j["ioc_matched"] = row.ioc_matched;
  j["ioc_reference"] = row.ioc_reference;
  j["ttp_matched"] = row.ttp_matched;
  j["ttp_reference"] = row.ttp_reference;
  if (row.cosine) j["cosine"] = *row.cosine;
  if (row.embedding) j["embedding"] = *row.embedding;
  return j.dump();
}

}  // namespace ctiforge
