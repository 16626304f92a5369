#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skipref {

enum class ErrorCode {
  NotLeftTotal,
  DanglingState,
  PartialLabeling,
  InvalidState,
  InvalidArgument,
  InvalidRefinementMap,
  IndexOutOfRange,
  MissingRankEntry,
  CyclicForcedStutter,
  NotAFailure,
  StateSpaceLimitExceeded,
  InapplicableFault,
  IncompatibleModels,
  UnknownRegister,
  PcMapInconsistent,
  DomainTooLarge,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotLeftTotal: return "NotLeftTotal";
    case ErrorCode::DanglingState: return "DanglingState";
    case ErrorCode::PartialLabeling: return "PartialLabeling";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidRefinementMap: return "InvalidRefinementMap";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::MissingRankEntry: return "MissingRankEntry";
    case ErrorCode::CyclicForcedStutter: return "CyclicForcedStutter";
    case ErrorCode::NotAFailure: return "NotAFailure";
    case ErrorCode::StateSpaceLimitExceeded: return "StateSpaceLimitExceeded";
    case ErrorCode::InapplicableFault: return "InapplicableFault";
    case ErrorCode::IncompatibleModels: return "IncompatibleModels";
    case ErrorCode::UnknownRegister: return "UnknownRegister";
    case ErrorCode::PcMapInconsistent: return "PcMapInconsistent";
    case ErrorCode::DomainTooLarge: return "DomainTooLarge";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above; the CLI
// maps them all to the "invalid input" exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace skipref
