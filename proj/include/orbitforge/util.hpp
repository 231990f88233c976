#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace orbitforge {

inline constexpr const char* kToolVersion = "0.3.0";

// UTC ISO-8601 timestamps; `fixed` pins every reading (replayable runs).
struct Clock {
  std::optional<std::string> fixed;

  std::string now_iso() const;
  // Uses ORBITFORGE_FIXED_CLOCK when set.
  static Clock from_environment();
};

// HEAD of the git checkout enclosing `dir`, or "unknown".
std::string git_commit(const std::filesystem::path& dir = std::filesystem::current_path());

// 32 lowercase hex digits from std::random_device.
std::string random_hex_id();

}  // namespace orbitforge
