#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "skipref/error.hpp"

namespace skipref::models {

/// Semantic mutations of the buffered machines, for negative testing.
enum class FaultKind {
  DropLastOnDrain,      // the last buffered instruction is not executed
  SkipPcIncrement,      // a draining step leaves the program counter alone
  MarkNewestRedundant,  // write coalescing keeps the older write
  OffByOnePointer,      // buffering advances the program counter by two
};

inline constexpr FaultKind kAllFaults[] = {FaultKind::DropLastOnDrain, FaultKind::SkipPcIncrement,
                                           FaultKind::MarkNewestRedundant,
                                           FaultKind::OffByOnePointer};

inline std::string_view to_string(FaultKind f) {
  switch (f) {
    case FaultKind::DropLastOnDrain: return "DropLastOnDrain";
    case FaultKind::SkipPcIncrement: return "SkipPcIncrement";
    case FaultKind::MarkNewestRedundant: return "MarkNewestRedundant";
    case FaultKind::OffByOnePointer: return "OffByOnePointer";
  }
  return "Unknown";
}

inline FaultKind parse_fault(std::string_view s) {
  for (FaultKind f : kAllFaults)
    if (to_string(f) == s) return f;
  throw Error(ErrorCode::InvalidArgument, "unknown fault '" + std::string(s) + "'");
}

}  // namespace skipref::models
