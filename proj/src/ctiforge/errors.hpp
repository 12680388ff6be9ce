#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctiforge {

enum class ErrorCode {
  // request / model validation
  UnknownThreatType,
  InvalidFileName,
  InvalidIntelSource,
  ValidationFailed,
  NameTaken,
  InvalidArgument,
  // ingest
  FetchError,
  TooLarge,
  Timeout,
  UnsupportedContentType,
  // extraction and catalog
  NotAHashLength,
  ParseError,
  DanglingParent,
  DuplicateId,
  // generation
  MissingTemplate,
  MissingContextField,
  InvalidTemplate,
  CapabilityMissing,
  BackendError,
  PreconditionFailed,
  // pipeline
  DuplicateSection,
  MonitorTimeout,
  // store
  StoreUnavailable,
  Conflict,
  UnknownRef,
  // evaluation
  MissingCorpusStats,
  ZeroVector,
  ProviderError,
  EmptyReference,
  Internal,
};

std::string_view to_string(ErrorCode code);

// Process exit code for an error, per the CLI exit-code table:
// 0 success, 2 validation, 3 name taken, 4 fetch, 5 backend, 6 store,
// 7 monitor timeout, 1 anything else.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, const std::string &message, std::string stage)
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  // Pipeline stage that raised the error, empty outside of a run.
  const std::string &stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

}  // namespace ctiforge
