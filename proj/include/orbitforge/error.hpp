#pragma once

#include <stdexcept>
#include <string>

namespace orbitforge {

enum class ErrorKind {
  invalid_parameter,
  behind_camera,
  degenerate_rotation,
  ambiguous_arc,
  parse,
  empty_mesh,
  io,
  not_found,
  transfer,
  config,
  validation,
  empty_dataset,
  refused,
  input_mismatch,
  invalid_box,
  internal,
};

const char* to_string(ErrorKind kind) noexcept;

// Process exit codes used by the command-line tool.
inline constexpr int kExitConfig = 2;    // bad configuration or malformed input
inline constexpr int kExitIo = 3;        // missing files, refusals
inline constexpr int kExitStorage = 4;   // object store / transfer failures
inline constexpr int kExitInternal = 5;

int exit_code(ErrorKind kind) noexcept;

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}

  ErrorKind kind() const noexcept { return kind_; }
  // HTTP status for transfer errors, line number for parse errors, else 0.
  int status() const noexcept { return status_; }

 private:
  ErrorKind kind_;
  int status_;
};

}  // namespace orbitforge
