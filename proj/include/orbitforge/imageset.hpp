#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbitforge/geometry.hpp"
#include "orbitforge/renderer.hpp"
#include "orbitforge/storage.hpp"
#include "orbitforge/util.hpp"

namespace orbitforge {

inline constexpr const char* kManifestName = "imageset_metadata.json";
inline constexpr const char* kIncompleteMarker = "_INCOMPLETE";

struct FrameRecord {
  std::string frame_id;  // "{sequence}_{index:06}"
  std::string sequence_name;
  std::uint64_t frame_index = 0;
  std::string timestamp;
  std::string image;
  std::string mask;
  std::string depth;
  std::vector<std::string> tags;           // sorted, unique
  std::vector<std::string> augmentations;  // compositor steps that fired
  ScenePose pose;
  LabelSet labels;

  // Fills id and file names for frame `index` of `sequence`.
  static FrameRecord make(const std::string& sequence, std::uint64_t index);
};

struct ImagesetManifest {
  std::string name;
  std::string author;
  std::string created;
  std::string git_commit = "unknown";
  std::uint64_t frame_count = 0;
  std::vector<std::string> tag_vocabulary;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  CameraIntrinsics camera;
};

nlohmann::json to_json(const ScenePose& pose);
ScenePose pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LabelSet& labels);
LabelSet labels_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FrameRecord& record);
FrameRecord frame_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ImagesetManifest& manifest);
ImagesetManifest manifest_from_json(const nlohmann::json& j);

// Sorted union of all frame tags.
std::vector<std::string> tag_vocabulary(std::span<const FrameRecord> records);
void validate_tags(const std::vector<std::string>& tags);

// Writes one imageset under root/{name}/. A `_INCOMPLETE` marker exists from
// construction until commit(), which writes the manifest last.
class ImagesetWriter {
 public:
  ImagesetWriter(std::filesystem::path root, std::string name, bool overwrite);

  // Safe to call concurrently for distinct frames.
  void write_frame(const FrameRecord& record, const RgbImage& color, const RenderOutput& render) const;
  ImagesetManifest commit(ImagesetManifest manifest, std::span<const FrameRecord> records);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::string name_;
};

struct FrameOutput {
  FrameRecord record;
  RgbImage color;  // augmented
  RenderOutput render;
};

// `manifest` supplies name/author/created/seed/camera; the rest is derived.
ImagesetManifest write_imageset(std::span<const FrameOutput> frames, ImagesetManifest manifest,
                                const std::filesystem::path& root, bool overwrite);

struct LoadedImageset {
  ImagesetManifest manifest;
  std::vector<FrameRecord> records;  // sorted by frame_id
};

// Reads {name}/imageset_metadata.json and every {name}/meta_*.json from the
// imagesets bucket, then re-checks the manifest invariants.
LoadedImageset load_imageset(const ObjectStore& store, const std::string& name);
// Same, for an imageset stored at root/{name} on disk.
LoadedImageset load_imageset(const std::filesystem::path& root, const std::string& name);

std::vector<std::string> list_imagesets(const ObjectStore& store);

// Copies root/{name} into the imagesets bucket, manifest last. Refuses
// directories still carrying the incomplete marker.
std::vector<std::string> upload_imageset(ObjectStore& store, const std::filesystem::path& root, const std::string& name);
// Inverse of upload_imageset; returns the number of objects written.
std::size_t download_imageset(const ObjectStore& store, const std::string& name, const std::filesystem::path& root);

}  // namespace orbitforge
