#include "orbitforge/sequences.hpp"

#include <algorithm>
#include <cmath>

#include "orbitforge/error.hpp"

namespace orbitforge {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorKind::invalid_parameter, msg);
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

void ParameterRanges::validate() const {
  require(position.min.finite() && position.max.finite(), "position range must be finite");
  require(position.min.x <= position.max.x && position.min.y <= position.max.y && position.min.z <= position.max.z,
          "position range needs min <= max");
  require(distance.min > 0.0 && distance.min <= distance.max && std::isfinite(distance.max),
          "distance range needs 0 < min <= max");
  for (const auto& o : {offset.min, offset.max}) {
    require(o.x >= 0.0 && o.x <= 1.0 && o.y >= 0.0 && o.y <= 1.0, "offset range must lie in [0,1]^2");
  }
  require(offset.min.x <= offset.max.x && offset.min.y <= offset.max.y, "offset range needs min <= max");
  if (lighting_direction.fixed) {
    require(std::abs(norm(*lighting_direction.fixed) - 1.0) <= 1e-9, "lighting_direction must be unit length");
  }
}

void SequenceSpec::validate() const {
  require(!name.empty(), "sequence name must be non-empty");
  if (const auto* r = std::get_if<RandomMode>(&mode)) {
    require(r->count >= 1, "random sequence needs count >= 1");
  } else {
    const auto& m = std::get<InterpolatedMode>(mode);
    require(m.waypoints.size() >= 2, "interpolated sequence needs at least 2 waypoints");
    require(m.frames_per_segment >= 1, "frames_per_segment must be >= 1");
    for (const auto& w : m.waypoints) w.validate();
  }
}

UnitQuaternion uniform_unit_quaternion(DeterministicRng& rng) {
  for (;;) {
    const double w = rng.normal(), x = rng.normal(), y = rng.normal(), z = rng.normal();
    if (w * w + x * x + y * y + z * z > 1e-12) return UnitQuaternion::from_components(w, x, y, z);
  }
}

Vec3 uniform_unit_vector(DeterministicRng& rng) {
  for (;;) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    if (dot(v, v) > 1e-12) return normalized(v);
  }
}

ScenePose sample_pose(const ParameterRanges& ranges, DeterministicRng& rng) {
  ScenePose pose;
  pose.position.x = rng.uniform(ranges.position.min.x, ranges.position.max.x);
  pose.position.y = rng.uniform(ranges.position.min.y, ranges.position.max.y);
  pose.position.z = rng.uniform(ranges.position.min.z, ranges.position.max.z);
  pose.distance = rng.uniform(ranges.distance.min, ranges.distance.max);
  pose.offset.x = rng.uniform(ranges.offset.min.x, ranges.offset.max.x);
  pose.offset.y = rng.uniform(ranges.offset.min.y, ranges.offset.max.y);
  pose.target_orientation =
      ranges.target_orientation.fixed ? *ranges.target_orientation.fixed : uniform_unit_quaternion(rng);
  pose.background_orientation =
      ranges.background_orientation.fixed ? *ranges.background_orientation.fixed : uniform_unit_quaternion(rng);
  pose.lighting_direction =
      ranges.lighting_direction.fixed ? *ranges.lighting_direction.fixed : uniform_unit_vector(rng);
  return pose;
}

std::vector<ScenePose> sample_random(const ParameterRanges& ranges, std::uint64_t count, std::uint64_t seed) {
  ranges.validate();
  std::vector<ScenePose> poses;
  poses.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    DeterministicRng rng(seed, i);
    poses.push_back(sample_pose(ranges, rng));
  }
  return poses;
}

Vec3 slerp_direction(const Vec3& a, const Vec3& b, double t) {
  require(t >= 0.0 && t <= 1.0, "interpolation parameter outside [0,1]");
  const double d = std::clamp(dot(a, b), -1.0, 1.0);
  if (d < -1.0 + 1e-9) {
    throw Error(ErrorKind::ambiguous_arc,
                "antipodal lighting directions have no unique shortest arc; add an intermediate waypoint");
  }
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  if (d > 1.0 - 1e-6) return normalized(a + (b - a) * t);
  const double omega = std::acos(d);
  const double so = std::sin(omega);
  return normalized(a * (std::sin((1.0 - t) * omega) / so) + b * (std::sin(t * omega) / so));
}

std::vector<ScenePose> interpolate(std::span<const ScenePose> waypoints, std::uint32_t frames_per_segment) {
  require(waypoints.size() >= 2, "interpolation needs at least 2 waypoints");
  require(frames_per_segment >= 1, "frames_per_segment must be >= 1");
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    if (dot(waypoints[i].lighting_direction, waypoints[i + 1].lighting_direction) < -1.0 + 1e-9) {
      throw Error(ErrorKind::ambiguous_arc, "waypoints " + std::to_string(i) + " and " + std::to_string(i + 1) +
                                                " have antipodal lighting directions; add an intermediate waypoint");
    }
  }

  std::vector<ScenePose> frames;
  frames.reserve((waypoints.size() - 1) * frames_per_segment + 1);
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const ScenePose& a = waypoints[i];
    const ScenePose& b = waypoints[i + 1];
    for (std::uint32_t j = 0; j < frames_per_segment; ++j) {
      if (j == 0) {
        frames.push_back(a);
        continue;
      }
      const double t = static_cast<double>(j) / frames_per_segment;
      ScenePose p;
      p.position = a.position + (b.position - a.position) * t;
      p.distance = lerp(a.distance, b.distance, t);
      p.offset = {lerp(a.offset.x, b.offset.x, t), lerp(a.offset.y, b.offset.y, t)};
      p.target_orientation = slerp(a.target_orientation, b.target_orientation, t);
      p.background_orientation = slerp(a.background_orientation, b.background_orientation, t);
      p.lighting_direction = slerp_direction(a.lighting_direction, b.lighting_direction, t);
      frames.push_back(p);
    }
  }
  frames.push_back(waypoints.back());
  return frames;
}

std::vector<ScenePose> build_sequence(const SequenceSpec& spec, const ParameterRanges& ranges) {
  spec.validate();
  if (const auto* r = std::get_if<RandomMode>(&spec.mode)) return sample_random(ranges, r->count, spec.seed);
  const auto& m = std::get<InterpolatedMode>(spec.mode);
  return interpolate(m.waypoints, m.frames_per_segment);
}

}  // namespace orbitforge
