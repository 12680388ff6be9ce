#pragma once

// One report run: validate, ingest, extract, generate (sections 1,4,5,6 and
// the 2+3 flow concurrently, then Tags), merge and commit. Nothing is
// committed unless all seven sections succeed.

#include "ctiforge/attack.hpp"
#include "ctiforge/generation.hpp"
#include "ctiforge/ingest.hpp"
#include "ctiforge/lexicon.hpp"
#include "ctiforge/model.hpp"
#include "ctiforge/store.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ctiforge {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunResult {
  CtiReport report;
  CommitRef commit;
  std::vector<UsageRecord> usages;  // one per section, ordinal order
  std::vector<StageTiming> timings;
  std::vector<Ioc> iocs;
  std::vector<TtpHit> ttps;
};

struct Backends {
  GenBackend *assistant = nullptr;  // sections 1, 4, 5, 6
  GenBackend *flow = nullptr;       // sections 2 + 3
  GenBackend *tags = nullptr;       // section 7
};

struct RunOptions {
  FetchLimits limits;
  RetryPolicy retry;
  // Creation date shown in the report. Defaults to SOURCE_DATE_EPOCH when
  // set, else the current time.
  std::optional<std::chrono::system_clock::time_point> generated_at;
  bool parallel = true;
  const TemplateRegistry *templates = nullptr;  // nullptr: bundled defaults
  // Called after each stage completes.
  std::function<void(const StageTiming &)> on_stage;
};

struct PipelineDeps {
  ReportStore *store = nullptr;
  Backends backends;
  const Catalog *catalog = nullptr;
  const Lexicon *lexicon = nullptr;
  RunOptions options;
};

// Core validations (wrapped as ValidationFailed) then NameTaken when the
// store already holds the file name.
IntelRequest validate_request(const IntelRequest &req, ReportStore &store);
IntelRequest validate_request(std::string_view intel_info, std::string_view threat_type,
                              std::string_view file_name, ReportStore &store);

// Errors carry the failing stage: ingest, extract, generate, merge, tags,
// commit.
RunResult run(const IntelRequest &req, const PipelineDeps &deps);

// "# {title}", a blank line, then the bodies in ordinal order separated by
// one blank line; exactly one trailing newline. Throws DuplicateSection.
std::string merge_sections(std::vector<ReportSection> sections, std::string_view title);

// File stem with '-' and '_' turned into spaces, title-cased.
std::string report_title(std::string_view file_name);

std::string commit_message_for(std::string_view file_name);

struct MonitorOptions {
  std::chrono::duration<double> interval{120.0};
  std::optional<std::chrono::duration<double>> timeout;  // unset: wait forever
  // Baseline: commits after this id count. Unset: the head when monitoring
  // starts, or the whole history when from_start is true.
  std::optional<std::string> since_id;
  bool from_start = false;
  std::function<void(int poll)> on_poll;
};

struct MonitorResult {
  CommitRef commit;
  int polls = 0;
};

// Polls list_commits_since immediately and then every `interval` until a
// commit touching `file_name` appears. Throws MonitorTimeout.
MonitorResult monitor(ReportStore &store, std::string_view file_name, const MonitorOptions &options = {});

}  // namespace ctiforge
