#pragma once

#include <string>
#include <string_view>

#include "sdt/common/error.hpp"

namespace sdt {

enum class EnvKind { kRun, kCircle, kReach };

inline std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kRun:
      return "run";
    case EnvKind::kCircle:
      return "circle";
    case EnvKind::kReach:
      return "reach";
  }
  return "run";
}

inline EnvKind parse_env_kind(std::string_view name) {
  if (name == "run") return EnvKind::kRun;
  if (name == "circle") return EnvKind::kCircle;
  if (name == "reach") return EnvKind::kReach;
  throw UsageError("unknown environment '" + std::string(name) + "' (expected run|circle|reach)");
}

}  // namespace sdt
