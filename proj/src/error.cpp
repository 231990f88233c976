#include "orbitforge/error.hpp"

namespace orbitforge {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::behind_camera: return "behind-camera";
    case ErrorKind::degenerate_rotation: return "degenerate-rotation";
    case ErrorKind::ambiguous_arc: return "ambiguous-arc";
    case ErrorKind::parse: return "parse";
    case ErrorKind::empty_mesh: return "empty-mesh";
    case ErrorKind::io: return "io";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::transfer: return "transfer";
    case ErrorKind::config: return "config";
    case ErrorKind::validation: return "validation";
    case ErrorKind::empty_dataset: return "empty-dataset";
    case ErrorKind::refused: return "refused";
    case ErrorKind::input_mismatch: return "input-mismatch";
    case ErrorKind::invalid_box: return "invalid-box";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::invalid_parameter:
    case ErrorKind::invalid_box:
    case ErrorKind::input_mismatch:
    case ErrorKind::behind_camera:
    case ErrorKind::degenerate_rotation:
    case ErrorKind::ambiguous_arc:
    case ErrorKind::empty_mesh:
      return kExitConfig;
    case ErrorKind::io:
    case ErrorKind::not_found:
    case ErrorKind::refused:
    case ErrorKind::empty_dataset:
      return kExitIo;
    case ErrorKind::transfer:
      return kExitStorage;
    case ErrorKind::internal:
      return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace orbitforge
