#include "ctiforge/pipeline.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/text.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <set>
#include <thread>

namespace ctiforge {

namespace fs = std::filesystem;

IntelRequest validate_request(const IntelRequest &req, ReportStore &store) {
  IntelRequest out = req;
  try {
    if (text::trim(req.intel.value).empty()) fail(ErrorCode::InvalidIntelSource, "intel source is empty");
    if (req.intel.kind == IntelSource::Kind::Url && parse_intel_source(req.intel.value).kind != IntelSource::Kind::Url) {
      fail(ErrorCode::InvalidIntelSource, "not an http(s) URL: " + req.intel.value);
    }
    validate_file_name(req.file_name);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::ValidationFailed) throw;
    throw Error(ErrorCode::ValidationFailed, e.what());
  }
  if (store.exists(out.file_name)) {
    throw Error(ErrorCode::NameTaken, "a report named " + out.file_name + " already exists; choose a new name");
  }
  return out;
}

IntelRequest validate_request(std::string_view intel_info, std::string_view threat_type, std::string_view file_name,
                              ReportStore &store) {
  IntelRequest req;
  try {
    req = make_request(intel_info, threat_type, file_name);
  } catch (const Error &e) {
    throw Error(ErrorCode::ValidationFailed, e.what());
  }
  return validate_request(req, store);
}

std::string report_title(std::string_view file_name) {
  std::string_view stem = file_name;
  if (stem.ends_with(".md")) stem.remove_suffix(3);
  return text::title_case(stem);
}

std::string commit_message_for(std::string_view file_name) { return "add CTI report: " + std::string(file_name); }

std::string merge_sections(std::vector<ReportSection> sections, std::string_view title) {
  std::stable_sort(sections.begin(), sections.end(),
                   [](const ReportSection &a, const ReportSection &b) { return ordinal(a.kind) < ordinal(b.kind); });
  for (std::size_t i = 1; i < sections.size(); ++i) {
    if (sections[i].kind == sections[i - 1].kind) {
      fail(ErrorCode::DuplicateSection, "duplicate section " + std::string(section_title(sections[i].kind)));
    }
  }
  std::string out = "# " + std::string(title) + "\n";
  for (const auto &s : sections) {
    out += "\n";
    out += text::trim(s.body);
    out += "\n";
  }
  return out;
}

namespace {

std::chrono::system_clock::time_point creation_time(const RunOptions &opts) {
  if (opts.generated_at) return *opts.generated_at;
  if (const char *epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    try {
      return std::chrono::system_clock::time_point(std::chrono::seconds(std::stoll(epoch)));
    } catch (const std::exception &) {
    }
  }
  return std::chrono::system_clock::now();
}

std::string source_label(const IntelSource &src) {
  switch (src.kind) {
    case IntelSource::Kind::Url: return src.value;
    case IntelSource::Kind::File: return fs::path(src.value).filename().string();
    case IntelSource::Kind::Inline: return "Inline text";
  }
  return {};
}

class StageClock {
 public:
  StageClock(std::vector<StageTiming> &timings, const RunOptions &opts) : timings_(timings), opts_(opts) {}

  template <typename F>
  auto operator()(const std::string &stage, F &&body) {
    const auto started = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        finish(stage, started);
      } else {
        auto result = body();
        finish(stage, started);
        return result;
      }
    } catch (const Error &e) {
      if (!e.stage().empty()) throw;
      throw Error(e.code(), stage + ": " + e.what(), stage);
    } catch (const std::exception &e) {
      throw Error(ErrorCode::Internal, stage + ": " + e.what(), stage);
    }
  }

 private:
  void finish(const std::string &stage, std::chrono::steady_clock::time_point started) {
    StageTiming t{stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()};
    timings_.push_back(t);
    if (opts_.on_stage) opts_.on_stage(t);
  }

  std::vector<StageTiming> &timings_;
  const RunOptions &opts_;
};

}  // namespace

RunResult run(const IntelRequest &req, const PipelineDeps &deps) {
  if (!deps.store || !deps.catalog || !deps.backends.assistant || !deps.backends.flow || !deps.backends.tags) {
    fail(ErrorCode::InvalidArgument, "pipeline needs a store, a catalog and all three backend profiles");
  }
  const RunOptions &opts = deps.options;
  const TemplateRegistry &templates = opts.templates ? *opts.templates : TemplateRegistry::defaults();

  RunResult result;
  StageClock stage(result.timings, opts);

  const std::string intel_text = stage("ingest", [&] { return extract_text(fetch_source(req.intel, opts.limits)); });

  stage("extract", [&] {
    result.iocs = extract_iocs(intel_text);
    result.ttps = extract_ttp_ids(intel_text, *deps.catalog);
  });

  GenerationContext ctx;
  ctx.threat_type = req.threat_type;
  ctx.title = report_title(req.file_name);
  ctx.generated_on = text::date_utc(creation_time(opts));
  ctx.source_label = source_label(req.intel);
  ctx.intel_text = intel_text;
  ctx.source_url = ctx.source_label;
  ctx.ioc_table = render_ioc_table(result.iocs);
  ctx.ttp_table = render_mitre_table(result.ttps, *deps.catalog);
  ctx.iocs = result.iocs;
  ctx.ttps = result.ttps;
  ctx.catalog = deps.catalog;
  ctx.lexicon = deps.lexicon;

  std::vector<ReportSection> sections = stage("generate", [&] {
    const auto launch = opts.parallel ? std::launch::async : std::launch::deferred;
    std::vector<std::future<ReportSection>> assistant;
    for (SectionKind k : {SectionKind::MetadataOverview, SectionKind::ToolsMalware,
                          SectionKind::DefenseRecommendations, SectionKind::References}) {
      assistant.push_back(std::async(launch, [&, k] {
        return generate_section(k, ctx, *deps.backends.assistant, opts.retry, templates);
      }));
    }
    auto flow = std::async(launch, [&] { return generate_flow(ctx, *deps.backends.flow, opts.retry, templates); });

    // Wait for everything before surfacing the first error in ordinal order,
    // so no task outlives the context it borrows.
    std::vector<ReportSection> out;
    std::exception_ptr first_error;
    std::vector<std::pair<int, std::exception_ptr>> errors;
    for (std::size_t i = 0; i < assistant.size(); ++i) {
      try {
        out.push_back(assistant[i].get());
      } catch (...) {
        static constexpr int kOrdinals[] = {1, 4, 5, 6};
        errors.emplace_back(kOrdinals[i], std::current_exception());
      }
    }
    try {
      auto [s2, s3] = flow.get();
      out.push_back(std::move(s2));
      out.push_back(std::move(s3));
    } catch (...) {
      errors.emplace_back(2, std::current_exception());
    }
    if (!errors.empty()) {
      std::sort(errors.begin(), errors.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
      std::rethrow_exception(errors.front().second);
    }
    std::sort(out.begin(), out.end(),
              [](const ReportSection &a, const ReportSection &b) { return ordinal(a.kind) < ordinal(b.kind); });
    return out;
  });

  const std::string merged_1_to_6 = stage("merge", [&] { return merge_sections(sections, ctx.title); });

  stage("tags", [&] {
    ctx.sections_1_to_6 = merged_1_to_6;
    sections.push_back(generate_tags(merged_1_to_6, ctx, *deps.backends.tags, opts.retry, templates));
  });

  result.report.file_name = req.file_name;
  result.report.threat_type = req.threat_type;
  result.report.merged = merge_sections(sections, ctx.title);
  result.report.sections = std::move(sections);
  for (const auto &s : result.report.sections) result.usages.push_back(s.meta.usage);

  result.commit = stage("commit", [&] {
    if (deps.store->exists(req.file_name)) {
      fail(ErrorCode::NameTaken, "a report named " + req.file_name + " appeared while generating; choose a new name");
    }
    return deps.store->put(req.file_name, result.report.merged, commit_message_for(req.file_name));
  });
  return result;
}

MonitorResult monitor(ReportStore &store, std::string_view file_name, const MonitorOptions &options) {
  if (!(options.interval.count() > 0)) fail(ErrorCode::InvalidArgument, "monitor interval must be positive");
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();

  std::optional<std::string> since = options.since_id;
  if (!since && !options.from_start) {
    if (auto head = store.latest_commit()) since = head->id;
  }

  MonitorResult result;
  for (;;) {
    ++result.polls;
    if (options.on_poll) options.on_poll(result.polls);
    for (auto &c : store.list_commits_since(since)) {
      if (c.touches(file_name)) {
        result.commit = std::move(c);
        return result;
      }
    }
    const auto elapsed = clock::now() - started;
    auto wait = std::chrono::duration_cast<clock::duration>(options.interval);
    if (options.timeout) {
      const auto limit = std::chrono::duration_cast<clock::duration>(*options.timeout);
      if (elapsed >= limit) {
        fail(ErrorCode::MonitorTimeout, "no commit for " + std::string(file_name) + " within " +
                                            std::to_string(options.timeout->count()) + " s");
      }
      wait = std::min(wait, limit - elapsed);
    }
    std::this_thread::sleep_for(wait);
  }
}

}  // namespace ctiforge
