#include "orbitforge/imageset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "orbitforge/error.hpp"
#include "orbitforge/image.hpp"

namespace orbitforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json quat_json(const UnitQuaternion& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::validation, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnitQuaternion quat_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::validation, "expected quaternion [w, x, y, z]");
  return UnitQuaternion::from_components(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                                         j[3].get<double>());
}

json point_json(const std::optional<PixelPoint>& p) {
  return p ? json::array({p->u, p->v}) : json(nullptr);
}

std::optional<PixelPoint> point_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return PixelPoint{j.at(0).get<double>(), j.at(1).get<double>()};
}

std::string frame_dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

FrameRecord FrameRecord::make(const std::string& sequence, std::uint64_t index) {
  char num[32];
  std::snprintf(num, sizeof num, "%06llu", static_cast<unsigned long long>(index));
  FrameRecord r;
  r.sequence_name = sequence;
  r.frame_index = index;
  r.frame_id = sequence + "_" + num;
  r.image = "image_" + r.frame_id + ".png";
  r.mask = "mask_" + r.frame_id + ".png";
  r.depth = "depth_" + r.frame_id + ".bin";
  return r;
}

json to_json(const ScenePose& pose) {
  return {{"position", vec_json(pose.position)},
          {"distance", pose.distance},
          {"offset", json::array({pose.offset.x, pose.offset.y})},
          {"target_orientation", quat_json(pose.target_orientation)},
          {"background_orientation", quat_json(pose.background_orientation)},
          {"lighting_direction", vec_json(pose.lighting_direction)}};
}

ScenePose pose_from_json(const json& j) {
  ScenePose p;
  p.position = vec_from(j.at("position"));
  p.distance = j.at("distance").get<double>();
  const auto& off = j.at("offset");
  p.offset = {off.at(0).get<double>(), off.at(1).get<double>()};
  p.target_orientation = quat_from(j.at("target_orientation"));
  p.background_orientation = quat_from(j.at("background_orientation"));
  p.lighting_direction = vec_from(j.at("lighting_direction"));
  return p;
}

json to_json(const LabelSet& labels) {
  json kps = json::array();
  for (const auto& k : labels.keypoints) kps.push_back(point_json(k));
  return {{"bbox", labels.bbox ? json::array({labels.bbox->xmin, labels.bbox->ymin, labels.bbox->xmax, labels.bbox->ymax})
                               : json(nullptr)},
          {"origin_px", point_json(labels.origin_px)},
          {"pose_camera",
           {{"translation", vec_json(labels.translation_camera)},
            {"orientation", quat_json(labels.orientation_camera)}}},
          {"visible_pixel_count", labels.visible_pixel_count},
          {"keypoints", kps}};
}

LabelSet labels_from_json(const json& j) {
  LabelSet l;
  if (const auto& b = j.at("bbox"); !b.is_null()) {
    l.bbox = PixelBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
  }
  l.origin_px = point_from(j.at("origin_px"));
  l.translation_camera = vec_from(j.at("pose_camera").at("translation"));
  l.orientation_camera = quat_from(j.at("pose_camera").at("orientation"));
  l.visible_pixel_count = j.at("visible_pixel_count").get<std::uint64_t>();
  if (j.contains("keypoints")) {
    for (const auto& k : j.at("keypoints")) l.keypoints.push_back(point_from(k));
  }
  if (l.bbox.has_value() != (l.visible_pixel_count > 0)) {
    throw Error(ErrorKind::validation, "bbox presence disagrees with visible_pixel_count");
  }
  return l;
}

json to_json(const FrameRecord& r) {
  return {{"frame_id", r.frame_id},
          {"sequence_name", r.sequence_name},
          {"frame_index", r.frame_index},
          {"timestamp", r.timestamp},
          {"image", r.image},
          {"mask", r.mask},
          {"depth", r.depth},
          {"tags", r.tags},
          {"augmentations", r.augmentations},
          {"pose", to_json(r.pose)},
          {"labels", to_json(r.labels)}};
}

FrameRecord frame_from_json(const json& j) {
  FrameRecord r;
  r.frame_id = j.at("frame_id").get<std::string>();
  r.sequence_name = j.at("sequence_name").get<std::string>();
  r.frame_index = j.at("frame_index").get<std::uint64_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.image = j.at("image").get<std::string>();
  r.mask = j.at("mask").get<std::string>();
  r.depth = j.at("depth").get<std::string>();
  r.tags = j.at("tags").get<std::vector<std::string>>();
  if (j.contains("augmentations")) r.augmentations = j.at("augmentations").get<std::vector<std::string>>();
  r.pose = pose_from_json(j.at("pose"));
  r.labels = labels_from_json(j.at("labels"));
  validate_tags(r.tags);
  if (r.frame_id.empty()) throw Error(ErrorKind::validation, "empty frame_id");
  return r;
}

json to_json(const ImagesetManifest& m) {
  return {{"name", m.name},
          {"author", m.author},
          {"created", m.created},
          {"git_commit", m.git_commit},
          {"frame_count", m.frame_count},
          {"tag_vocabulary", m.tag_vocabulary},
          {"seed", m.seed},
          {"tool_version", m.tool_version},
          {"camera",
           {{"width_px", m.camera.width_px},
            {"height_px", m.camera.height_px},
            {"vertical_fov", m.camera.vertical_fov}}}};
}

ImagesetManifest manifest_from_json(const json& j) {
  ImagesetManifest m;
  m.name = j.at("name").get<std::string>();
  m.author = j.at("author").get<std::string>();
  m.created = j.at("created").get<std::string>();
  m.git_commit = j.at("git_commit").get<std::string>();
  m.frame_count = j.at("frame_count").get<std::uint64_t>();
  m.tag_vocabulary = j.at("tag_vocabulary").get<std::vector<std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.tool_version = j.at("tool_version").get<std::string>();
  if (j.contains("camera")) {
    const auto& c = j.at("camera");
    m.camera.width_px = c.at("width_px").get<std::uint32_t>();
    m.camera.height_px = c.at("height_px").get<std::uint32_t>();
    m.camera.vertical_fov = c.at("vertical_fov").get<double>();
  }
  return m;
}

void validate_tags(const std::vector<std::string>& tags) {
  for (const auto& t : tags) {
    if (t.empty() || t.find(',') != std::string::npos) {
      throw Error(ErrorKind::validation, "tags must be non-empty and contain no commas: '" + t + "'");
    }
  }
}

std::vector<std::string> tag_vocabulary(std::span<const FrameRecord> records) {
  std::set<std::string> all;
  for (const auto& r : records) all.insert(r.tags.begin(), r.tags.end());
  return {all.begin(), all.end()};
}

ImagesetWriter::ImagesetWriter(fs::path root, std::string name, bool overwrite)
    : dir_(root / name), name_(std::move(name)) {
  validate_key(name_);
  if (name_.find('/') != std::string::npos) throw Error(ErrorKind::invalid_parameter, "imageset name may not contain '/'");
  std::error_code ec;
  if (fs::exists(dir_, ec) && !fs::is_empty(dir_, ec)) {
    if (!overwrite) {
      throw Error(ErrorKind::refused, "imageset directory " + dir_.string() + " is not empty (use overwrite)");
    }
    fs::remove_all(dir_, ec);
    if (ec) throw Error(ErrorKind::io, "cannot clear " + dir_.string() + ": " + ec.message());
  }
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + dir_.string() + ": " + ec.message());
  write_file_atomic(dir_ / kIncompleteMarker, std::string("generation in progress\n"));
}

void ImagesetWriter::write_frame(const FrameRecord& record, const RgbImage& color, const RenderOutput& render) const {
  validate_tags(record.tags);
  write_file_atomic(dir_ / record.image, encode_png(color));
  write_file_atomic(dir_ / record.mask, encode_png(render.mask));
  write_file_atomic(dir_ / record.depth, encode_depth(render.depth));
  write_file_atomic(dir_ / ("meta_" + record.frame_id + ".json"), frame_dump(to_json(record)));
}

ImagesetManifest ImagesetWriter::commit(ImagesetManifest manifest, std::span<const FrameRecord> records) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.frame_id).second) throw Error(ErrorKind::validation, "duplicate frame_id " + r.frame_id);
  }
  manifest.name = name_;
  manifest.frame_count = records.size();
  manifest.tag_vocabulary = tag_vocabulary(records);
  write_file_atomic(dir_ / kManifestName, to_json(manifest).dump(2) + "\n");
  std::error_code ec;
  fs::remove(dir_ / kIncompleteMarker, ec);
  return manifest;
}

ImagesetManifest write_imageset(std::span<const FrameOutput> frames, ImagesetManifest manifest, const fs::path& root,
                                bool overwrite) {
  ImagesetWriter writer(root, manifest.name, overwrite);
  std::vector<FrameRecord> records;
  for (const auto& f : frames) {
    writer.write_frame(f.record, f.color, f.render);
    records.push_back(f.record);
  }
  return writer.commit(std::move(manifest), records);
}

LoadedImageset load_imageset(const ObjectStore& store, const std::string& name) {
  LoadedImageset out;
  const ObjectKey manifest_key(BucketRole::imagesets, name + "/" + kManifestName);
  std::string manifest_text;
  try {
    manifest_text = store.get_text(manifest_key);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::not_found) throw;
    throw Error(ErrorKind::not_found, "'" + name + "' is not an imageset (no " + kManifestName + ")");
  }
  try {
    out.manifest = manifest_from_json(json::parse(manifest_text));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, name + "/" + kManifestName + ": " + e.what());
  }

  std::vector<std::string> errors;
  for (const auto& key : store.list(BucketRole::imagesets, name + "/meta_")) {
    if (!key.ends_with(".json")) continue;
    try {
      out.records.push_back(frame_from_json(json::parse(store.get_text(ObjectKey(BucketRole::imagesets, key)))));
    } catch (const json::exception& e) {
      errors.push_back(key + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::transfer || e.kind() == ErrorKind::io) throw;
      errors.push_back(key + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = name + ": " + std::to_string(errors.size()) + " invalid frame record(s)";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(ErrorKind::validation, msg);
  }

  std::sort(out.records.begin(), out.records.end(),
            [](const FrameRecord& a, const FrameRecord& b) { return a.frame_id < b.frame_id; });
  for (std::size_t i = 1; i < out.records.size(); ++i) {
    if (out.records[i].frame_id == out.records[i - 1].frame_id) {
      throw Error(ErrorKind::validation, name + ": duplicate frame_id " + out.records[i].frame_id);
    }
  }
  if (out.manifest.frame_count != out.records.size()) {
    throw Error(ErrorKind::validation, name + ": manifest frame_count " + std::to_string(out.manifest.frame_count) +
                                           " but " + std::to_string(out.records.size()) + " frame records present");
  }
  if (out.manifest.tag_vocabulary != tag_vocabulary(out.records)) {
    throw Error(ErrorKind::validation, name + ": tag_vocabulary does not match the union of frame tags");
  }
  return out;
}

LoadedImageset load_imageset(const fs::path& root, const std::string& name) {
  return load_imageset(LocalStore::for_bucket_dir(BucketRole::imagesets, root), name);
}

std::vector<std::string> list_imagesets(const ObjectStore& store) {
  std::vector<std::string> names;
  const std::string suffix = std::string("/") + kManifestName;
  for (const auto& key : store.list(BucketRole::imagesets, "")) {
    if (key.ends_with(suffix) && key.find('/') == key.size() - suffix.size()) {
      names.push_back(key.substr(0, key.size() - suffix.size()));
    }
  }
  return names;
}

std::vector<std::string> upload_imageset(ObjectStore& store, const fs::path& root, const std::string& name) {
  const fs::path dir = root / name;
  std::error_code ec;
  if (fs::exists(dir / kIncompleteMarker, ec)) {
    throw Error(ErrorKind::refused, dir.string() + " is incomplete; refusing to upload");
  }
  if (!fs::is_regular_file(dir / kManifestName, ec)) {
    throw Error(ErrorKind::not_found, dir.string() + " is not an imageset (no " + kManifestName + ")");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (entry.is_regular_file() && !fname.starts_with(kTempPrefix) && entry.path() != dir / kManifestName) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  files.push_back(dir / kManifestName);
  std::vector<std::string> keys;
  for (const auto& f : files) {
    const std::string key = name + "/" + fs::relative(f, dir).generic_string();
    store.put(ObjectKey(BucketRole::imagesets, key), read_file(f));
    keys.push_back(key);
  }
  return keys;
}

std::size_t download_imageset(const ObjectStore& store, const std::string& name, const fs::path& root) {
  if (!store.exists(ObjectKey(BucketRole::imagesets, name + "/" + kManifestName))) {
    throw Error(ErrorKind::not_found, "'" + name + "' is not an imageset in " + store.describe());
  }
  return download_prefix(store, BucketRole::imagesets, name + "/", root / name);
}

}  // namespace orbitforge
