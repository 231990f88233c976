#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "orbitforge/config.hpp"
#include "orbitforge/imageset.hpp"
#include "orbitforge/storage.hpp"
#include "orbitforge/util.hpp"

namespace orbitforge {

struct GenerateOptions {
  std::filesystem::path output_root;    // imageset lands in output_root/{imageset_name}
  ObjectStore* upload_store = nullptr;  // required when the config asks for upload
  Clock clock;
  std::string git_commit = "unknown";
  // Called after each finished frame, possibly from worker threads (serialized).
  std::function<void(std::size_t done, std::size_t total, const std::string& frame_id)> progress;
};

struct GenerateResult {
  ImagesetManifest manifest;
  std::filesystem::path dir;
  std::vector<std::string> warnings;
  std::vector<std::string> uploaded_keys;
};

// poses -> resolve -> render -> labels -> augment -> write, on `workers`
// threads. Frame i draws augmentations from stream kAugmentationStreamBase | i,
// so output does not depend on the worker count.
GenerateResult generate_imageset(const GenerationConfig& config, const GenerateOptions& options);

}  // namespace orbitforge
