#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orbitforge/compositor.hpp"
#include "orbitforge/curation.hpp"
#include "orbitforge/geometry.hpp"
#include "orbitforge/sequences.hpp"

namespace orbitforge {

struct GenerationConfig {
  std::string imageset_name;
  std::string author;
  std::filesystem::path mesh;  // relative paths resolve against the config file
  CameraIntrinsics camera;
  SequenceSpec sequence;
  ParameterRanges ranges;
  AugmentationSpec augmentations;
  std::vector<std::string> tags;
  bool upload = false;
  unsigned workers = 1;
  bool overwrite = false;
  std::vector<Vec3> keypoints;  // model-frame points projected into every frame

  void validate() const;
};

// All loaders reject unknown keys, naming the key and line; errors are ErrorKind::config.
GenerationConfig parse_generation_config(const std::string& yaml, const std::filesystem::path& base_dir = {});
GenerationConfig load_generation_config(const std::filesystem::path& path);

CurationConfig parse_curation_config(const std::string& yaml);
CurationConfig load_curation_config(const std::filesystem::path& path);

FilterPlan parse_filter_plan(const std::string& yaml);
FilterPlan load_filter_plan(const std::filesystem::path& path);

}  // namespace orbitforge
