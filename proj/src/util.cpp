#include "orbitforge/util.hpp"

#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <memory>
#include <random>

namespace orbitforge {

std::string Clock::now_iso() const {
  if (fixed) return *fixed;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

Clock Clock::from_environment() {
  Clock c;
  if (const char* v = std::getenv("ORBITFORGE_FIXED_CLOCK"); v && *v) c.fixed = v;
  return c;
}

std::string git_commit(const std::filesystem::path& dir) {
  const std::string cmd = "git -C '" + dir.string() + "' rev-parse HEAD 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return "unknown";
  std::array<char, 128> buf{};
  std::string out;
  while (std::fgets(buf.data(), buf.size(), pipe.get())) out += buf.data();
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  if (out.size() != 40) return "unknown";
  for (char c : out) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return "unknown";
  }
  return out;
}

std::string random_hex_id() {
  std::random_device rd;
  static constexpr char digits[] = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 4; ++i) {
    std::uint32_t word = rd();
    for (int k = 0; k < 8; ++k) {
      id.push_back(digits[word & 0xF]);
      word >>= 4;
    }
  }
  return id;
}

}  // namespace orbitforge
