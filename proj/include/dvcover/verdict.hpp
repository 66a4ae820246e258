#pragma once

#include <string_view>

namespace dvcover {

enum class Verdict { converges, diverges, unknown };

enum class TriState { yes, no, unknown };

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::converges:
      return "converges";
    case Verdict::diverges:
      return "diverges";
    default:
      return "unknown";
  }
}

constexpr std::string_view to_string(TriState t) {
  switch (t) {
    case TriState::yes:
      return "yes";
    case TriState::no:
      return "no";
    default:
      return "unknown";
  }
}

}  // namespace dvcover
