#include "ctiforge/errors.hpp"

namespace ctiforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownThreatType: return "UnknownThreatType";
    case ErrorCode::InvalidFileName: return "InvalidFileName";
    case ErrorCode::InvalidIntelSource: return "InvalidIntelSource";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::NameTaken: return "NameTaken";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FetchError: return "FetchError";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UnsupportedContentType: return "UnsupportedContentType";
    case ErrorCode::NotAHashLength: return "NotAHashLength";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DanglingParent: return "DanglingParent";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::MissingContextField: return "MissingContextField";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::CapabilityMissing: return "CapabilityMissing";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::DuplicateSection: return "DuplicateSection";
    case ErrorCode::MonitorTimeout: return "MonitorTimeout";
    case ErrorCode::StoreUnavailable: return "StoreUnavailable";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::UnknownRef: return "UnknownRef";
    case ErrorCode::MissingCorpusStats: return "MissingCorpusStats";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownThreatType:
    case ErrorCode::InvalidFileName:
    case ErrorCode::InvalidIntelSource:
    case ErrorCode::ValidationFailed:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::DanglingParent:
    case ErrorCode::DuplicateId:
      return 2;
    case ErrorCode::NameTaken:
      return 3;
    case ErrorCode::FetchError:
    case ErrorCode::TooLarge:
    case ErrorCode::Timeout:
    case ErrorCode::UnsupportedContentType:
      return 4;
    case ErrorCode::MissingTemplate:
    case ErrorCode::MissingContextField:
    case ErrorCode::InvalidTemplate:
    case ErrorCode::CapabilityMissing:
    case ErrorCode::BackendError:
    case ErrorCode::PreconditionFailed:
    case ErrorCode::DuplicateSection:
      return 5;
    case ErrorCode::StoreUnavailable:
    case ErrorCode::Conflict:
    case ErrorCode::UnknownRef:
      return 6;
    case ErrorCode::MonitorTimeout:
      return 7;
    default:
      return 1;
  }
}

}  // namespace ctiforge
