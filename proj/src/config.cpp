#include "orbitforge/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <type_traits>

#include "orbitforge/error.hpp"
#include "orbitforge/imageset.hpp"

namespace orbitforge {

namespace fs = std::filesystem;

namespace {

// A YAML node plus its dotted path, for error messages.
struct Field {
  YAML::Node node;
  std::string path;

  [[noreturn]] void fail(const std::string& what) const {
    const auto mark = node.Mark();
    std::string where = path.empty() ? "document" : "'" + path + "'";
    if (mark.line >= 0) where += " (line " + std::to_string(mark.line + 1) + ")";
    throw Error(ErrorKind::config, where + ": " + what);
  }

  Field child(const std::string& key) const { return {node[key], path.empty() ? key : path + "." + key}; }
  Field item(std::size_t i) const { return {node[i], path + "[" + std::to_string(i) + "]"}; }
  bool has(const std::string& key) const { return node.IsMap() && node[key].IsDefined() && !node[key].IsNull(); }

  void expect_map(std::initializer_list<const char*> allowed, std::initializer_list<const char*> required = {}) const {
    if (!node.IsMap()) fail("expected a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) {
        Field{kv.first, path.empty() ? key : path + "." + key}.fail("unknown key '" + key + "'");
      }
    }
    for (const char* r : required) {
      if (!has(r)) fail(std::string("missing required key '") + r + "'");
    }
  }

  template <typename T>
  T as() const {
    if (!node.IsScalar()) fail("expected a scalar");
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (node.Scalar().starts_with("-")) fail("must be >= 0");
    }
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail("cannot read '" + node.Scalar() + "' as the expected type");
    }
  }

  std::vector<Field> seq() const {
    if (!node.IsSequence()) fail("expected a list");
    std::vector<Field> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(item(i));
    return out;
  }

  std::vector<double> numbers(std::size_t n) const {
    const auto items = seq();
    if (items.size() != n) fail("expected " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& f : items) out.push_back(f.as<double>());
    return out;
  }

  Vec3 vec3() const {
    const auto v = numbers(3);
    return {v[0], v[1], v[2]};
  }

  NormalizedOffset offset() const {
    const auto v = numbers(2);
    return {v[0], v[1]};
  }

  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (const auto& f : seq()) out.push_back(f.as<std::string>());
    return out;
  }

  // [w, x, y, z] or {axis: [x, y, z], angle_deg: a}
  UnitQuaternion quaternion() const {
    try {
      if (node.IsSequence()) {
        const auto q = numbers(4);
        return UnitQuaternion::from_components(q[0], q[1], q[2], q[3]);
      }
      expect_map({"axis", "angle_deg"}, {"axis", "angle_deg"});
      return UnitQuaternion::from_axis_angle(child("axis").vec3(),
                                             child("angle_deg").as<double>() * std::numbers::pi / 180.0);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config) throw;
      fail(e.what());
    }
  }

  // Any non-zero vector; normalized here.
  Vec3 direction() const {
    const Vec3 v = vec3();
    if (!v.finite() || norm(v) < 1e-12) fail("direction must be a non-zero vector");
    return normalized(v);
  }

  bool is_random() const { return node.IsScalar() && node.Scalar() == "random"; }
};

Field root_of(const std::string& yaml) {
  try {
    YAML::Node n = YAML::Load(yaml);
    if (!n.IsDefined() || n.IsNull()) throw Error(ErrorKind::config, "configuration is empty");
    return {n, ""};
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::config, std::string("YAML syntax error: ") + e.what(), e.mark.line + 1);
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

ScalarRange scalar_range(const Field& f) {
  if (f.node.IsScalar()) {
    const double v = f.as<double>();
    return {v, v};
  }
  f.expect_map({"min", "max"}, {"min", "max"});
  return {f.child("min").as<double>(), f.child("max").as<double>()};
}

ScenePose pose_of(const Field& f) {
  f.expect_map({"position", "distance", "offset", "target_orientation", "background_orientation",
                "lighting_direction"});
  ScenePose p;
  if (f.has("position")) p.position = f.child("position").vec3();
  if (f.has("distance")) p.distance = f.child("distance").as<double>();
  if (f.has("offset")) p.offset = f.child("offset").offset();
  if (f.has("target_orientation")) p.target_orientation = f.child("target_orientation").quaternion();
  if (f.has("background_orientation")) p.background_orientation = f.child("background_orientation").quaternion();
  if (f.has("lighting_direction")) p.lighting_direction = f.child("lighting_direction").direction();
  return p;
}

ParameterRanges ranges_of(const Field& f) {
  f.expect_map({"position", "distance", "offset", "target_orientation", "background_orientation",
                "lighting_direction"});
  ParameterRanges r;
  if (f.has("position")) {
    const Field pos = f.child("position");
    if (pos.node.IsSequence()) {
      r.position.min = r.position.max = pos.vec3();
    } else {
      pos.expect_map({"min", "max"}, {"min", "max"});
      r.position = {pos.child("min").vec3(), pos.child("max").vec3()};
    }
  }
  if (f.has("distance")) r.distance = scalar_range(f.child("distance"));
  if (f.has("offset")) {
    const Field off = f.child("offset");
    if (off.node.IsSequence()) {
      r.offset.min = r.offset.max = off.offset();
    } else {
      off.expect_map({"min", "max"}, {"min", "max"});
      r.offset = {off.child("min").offset(), off.child("max").offset()};
    }
  }
  auto orientation = [&](const char* key, OrientationRange& out) {
    if (!f.has(key)) return;
    const Field o = f.child(key);
    if (o.is_random()) {
      out.fixed.reset();
    } else {
      out.fixed = o.quaternion();
    }
  };
  orientation("target_orientation", r.target_orientation);
  orientation("background_orientation", r.background_orientation);
  if (f.has("lighting_direction")) {
    const Field l = f.child("lighting_direction");
    if (l.is_random()) {
      r.lighting_direction.fixed.reset();
    } else {
      r.lighting_direction.fixed = l.direction();
    }
  }
  return r;
}

SequenceSpec sequence_of(const Field& f) {
  f.expect_map({"name", "seed", "mode", "count", "frames_per_segment", "waypoints"}, {"mode"});
  SequenceSpec s;
  if (f.has("name")) s.name = f.child("name").as<std::string>();
  if (f.has("seed")) s.seed = f.child("seed").as<std::uint64_t>();
  const std::string mode = f.child("mode").as<std::string>();
  if (mode == "random") {
    if (f.has("waypoints") || f.has("frames_per_segment")) f.fail("random mode takes only 'count'");
    if (!f.has("count")) f.fail("random mode needs 'count'");
    s.mode = RandomMode{f.child("count").as<std::uint64_t>()};
  } else if (mode == "interpolated") {
    if (f.has("count")) f.fail("interpolated mode takes 'waypoints' and 'frames_per_segment', not 'count'");
    if (!f.has("waypoints")) f.fail("interpolated mode needs 'waypoints'");
    InterpolatedMode m;
    for (const auto& w : f.child("waypoints").seq()) m.waypoints.push_back(pose_of(w));
    if (f.has("frames_per_segment")) m.frames_per_segment = f.child("frames_per_segment").as<std::uint32_t>();
    s.mode = std::move(m);
  } else {
    f.child("mode").fail("mode must be 'random' or 'interpolated'");
  }
  return s;
}

AugmentationStep augmentation_of(const Field& f, const fs::path& base) {
  if (!f.node.IsMap() || !f.has("type")) f.fail("augmentation step needs a 'type'");
  const std::string type = f.child("type").as<std::string>();
  AugmentationStep step;
  auto common = [&] {
    if (f.has("probability")) step.probability = f.child("probability").as<double>();
    if (f.has("tags")) step.tags = f.child("tags").strings();
  };
  if (type == "background") {
    f.expect_map({"type", "probability", "tags", "mode", "path", "strict"}, {"mode"});
    BackgroundStep b;
    const std::string mode = f.child("mode").as<std::string>();
    if (mode == "black") {
      b.mode = BackgroundMode::black;
    } else if (mode == "image") {
      b.mode = BackgroundMode::image;
    } else if (mode == "directory") {
      b.mode = BackgroundMode::directory;
    } else {
      f.child("mode").fail("background mode must be black, image or directory");
    }
    if (b.mode != BackgroundMode::black) {
      if (!f.has("path")) f.fail("background mode '" + mode + "' needs 'path'");
      b.path = resolve(base, f.child("path").as<std::string>());
    }
    if (f.has("strict")) b.strict = f.child("strict").as<bool>();
    step.op = b;
  } else if (type == "blur") {
    f.expect_map({"type", "probability", "tags", "sigma"}, {"sigma"});
    step.op = BlurStep{f.child("sigma").as<double>()};
  } else if (type == "bloom") {
    f.expect_map({"type", "probability", "tags", "threshold", "radius", "gain"});
    BloomStep b;
    if (f.has("threshold")) b.threshold = f.child("threshold").as<double>();
    if (f.has("radius")) b.radius = f.child("radius").as<double>();
    if (f.has("gain")) b.gain = f.child("gain").as<double>();
    step.op = b;
  } else if (type == "star") {
    f.expect_map({"type", "probability", "tags", "threshold", "num_streaks", "length", "gain"});
    StarStep s;
    if (f.has("threshold")) s.threshold = f.child("threshold").as<double>();
    if (f.has("num_streaks")) s.num_streaks = f.child("num_streaks").as<int>();
    if (f.has("length")) s.length = f.child("length").as<int>();
    if (f.has("gain")) s.gain = f.child("gain").as<double>();
    step.op = s;
  } else if (type == "exposure") {
    f.expect_map({"type", "probability", "tags", "scale"}, {"scale"});
    step.op = ExposureStep{f.child("scale").as<double>()};
  } else {
    f.child("type").fail("unknown augmentation type '" + type + "'");
  }
  common();
  return step;
}

// Re-raises module validation errors as config errors.
template <typename Fn>
void as_config(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    throw Error(ErrorKind::config, e.what());
  }
}

}  // namespace

void GenerationConfig::validate() const {
  as_config([&] {
    if (imageset_name.empty()) throw Error(ErrorKind::config, "imageset_name must be set");
    validate_key(imageset_name);
    if (imageset_name.find('/') != std::string::npos) throw Error(ErrorKind::config, "imageset_name may not contain '/'");
    if (mesh.empty()) throw Error(ErrorKind::config, "mesh must be set");
    if (workers < 1) throw Error(ErrorKind::config, "workers must be >= 1");
    camera.validate();
    sequence.validate();
    ranges.validate();
    augmentations.validate();
    validate_tags(tags);
    for (const auto& k : keypoints) {
      if (!k.finite()) throw Error(ErrorKind::config, "keypoints must be finite");
    }
  });
}

GenerationConfig parse_generation_config(const std::string& yaml, const fs::path& base_dir) {
  const Field root = root_of(yaml);
  root.expect_map({"imageset_name", "author", "mesh", "camera", "sequence", "ranges", "augmentations", "tags", "upload",
                   "workers", "overwrite", "keypoints"},
                  {"imageset_name", "mesh", "sequence"});
  GenerationConfig c;
  c.imageset_name = root.child("imageset_name").as<std::string>();
  if (root.has("author")) c.author = root.child("author").as<std::string>();
  c.mesh = resolve(base_dir, root.child("mesh").as<std::string>());
  if (root.has("camera")) {
    const Field cam = root.child("camera");
    cam.expect_map({"width", "height", "vertical_fov_deg"});
    if (cam.has("width")) c.camera.width_px = cam.child("width").as<std::uint32_t>();
    if (cam.has("height")) c.camera.height_px = cam.child("height").as<std::uint32_t>();
    if (cam.has("vertical_fov_deg")) {
      c.camera.vertical_fov = cam.child("vertical_fov_deg").as<double>() * std::numbers::pi / 180.0;
    }
  }
  c.sequence = sequence_of(root.child("sequence"));
  if (root.has("ranges")) c.ranges = ranges_of(root.child("ranges"));
  if (root.has("augmentations")) {
    for (const auto& step : root.child("augmentations").seq()) {
      c.augmentations.steps.push_back(augmentation_of(step, base_dir));
    }
  }
  if (root.has("tags")) c.tags = root.child("tags").strings();
  if (root.has("upload")) c.upload = root.child("upload").as<bool>();
  if (root.has("workers")) c.workers = root.child("workers").as<unsigned>();
  if (root.has("overwrite")) c.overwrite = root.child("overwrite").as<bool>();
  if (root.has("keypoints")) {
    for (const auto& k : root.child("keypoints").seq()) c.keypoints.push_back(k.vec3());
  }
  c.validate();
  return c;
}

GenerationConfig load_generation_config(const fs::path& path) {
  return parse_generation_config(read_text(path), path.parent_path());
}

CurationConfig parse_curation_config(const std::string& yaml) {
  const Field root = root_of(yaml);
  root.expect_map({"dataset_name", "local", "imageset", "overwrite_local", "kfolds", "test_percent", "upload",
                   "delete_local", "metadata", "plugin"},
                  {"dataset_name", "imageset"});
  CurationConfig c;
  c.dataset_name = root.child("dataset_name").as<std::string>();
  if (root.has("local")) c.local = root.child("local").as<bool>();
  c.imageset = root.child("imageset").strings();
  if (root.has("overwrite_local")) c.overwrite_local = root.child("overwrite_local").as<bool>();
  if (root.has("kfolds")) c.kfolds = root.child("kfolds").as<int>();
  if (root.has("test_percent")) c.test_percent = root.child("test_percent").as<double>();
  if (root.has("upload")) c.upload = root.child("upload").as<bool>();
  if (root.has("delete_local")) c.delete_local = root.child("delete_local").as<bool>();
  if (root.has("metadata")) {
    const Field m = root.child("metadata");
    m.expect_map({"created_by", "comments"});
    if (m.has("created_by")) c.metadata.created_by = m.child("created_by").as<std::string>();
    if (m.has("comments")) c.metadata.comments = m.child("comments").as<std::string>();
  }
  if (root.has("plugin")) {
    const Field p = root.child("plugin");
    if (!p.node.IsMap()) p.fail("expected a mapping");
    // Scalars stay strings; the transform decides what they mean.
    std::function<nlohmann::json(const YAML::Node&)> convert = [&](const YAML::Node& n) -> nlohmann::json {
      if (n.IsMap()) {
        nlohmann::json o = nlohmann::json::object();
        for (const auto& kv : n) o[kv.first.as<std::string>()] = convert(kv.second);
        return o;
      }
      if (n.IsSequence()) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& e : n) a.push_back(convert(e));
        return a;
      }
      if (n.IsNull()) return nullptr;
      return n.Scalar();
    };
    c.plugin = convert(p.node);
  }
  c.validate();
  return c;
}

CurationConfig load_curation_config(const fs::path& path) { return parse_curation_config(read_text(path)); }

FilterPlan parse_filter_plan(const std::string& yaml) {
  const Field root = root_of(yaml);
  root.expect_map({"seed", "size_caps", "tag_filters", "final_cap"});
  FilterPlan p;
  if (root.has("seed")) p.seed = root.child("seed").as<std::uint64_t>();
  if (root.has("size_caps")) {
    const Field caps = root.child("size_caps");
    if (!caps.node.IsMap()) caps.fail("expected a mapping of imageset name to frame count");
    for (const auto& kv : caps.node) {
      const auto name = kv.first.as<std::string>();
      const Field cap{kv.second, caps.path + "." + name};
      p.size_caps[name] = cap.as<std::uint64_t>();
    }
  }
  if (root.has("tag_filters")) {
    for (const auto& f : root.child("tag_filters").seq()) {
      f.expect_map({"mode", "tags"}, {"mode", "tags"});
      TagFilter tf;
      const std::string mode = f.child("mode").as<std::string>();
      if (mode == "AND" || mode == "and") {
        tf.mode = TagMode::AND;
      } else if (mode == "OR" || mode == "or") {
        tf.mode = TagMode::OR;
      } else {
        f.child("mode").fail("mode must be AND or OR");
      }
      const auto tags = f.child("tags").strings();
      tf.tags = {tags.begin(), tags.end()};
      if (tf.tags.empty()) f.child("tags").fail("tag filter needs at least one tag");
      p.tag_filters.push_back(std::move(tf));
    }
  }
  if (root.has("final_cap")) {
    const Field cap = root.child("final_cap");
    p.final_cap = cap.as<std::uint64_t>();
  }
  return p;
}

FilterPlan load_filter_plan(const fs::path& path) { return parse_filter_plan(read_text(path)); }

}  // namespace orbitforge
