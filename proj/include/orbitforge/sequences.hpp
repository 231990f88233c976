#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "orbitforge/geometry.hpp"
#include "orbitforge/rng.hpp"

namespace orbitforge {

struct ScalarRange {
  double min = 0.0;
  double max = 0.0;
};

struct Vec3Range {
  Vec3 min;
  Vec3 max;
};

struct OffsetRange {
  NormalizedOffset min{0.5, 0.5};
  NormalizedOffset max{0.5, 0.5};
};

// Fixed value, or Haar-uniform / sphere-uniform when empty.
struct OrientationRange {
  std::optional<UnitQuaternion> fixed = UnitQuaternion::identity();
};
struct DirectionRange {
  std::optional<Vec3> fixed = Vec3{0.0, 0.0, -1.0};
};

struct ParameterRanges {
  Vec3Range position;
  ScalarRange distance{10.0, 10.0};
  OffsetRange offset;
  OrientationRange target_orientation;
  OrientationRange background_orientation;
  DirectionRange lighting_direction;

  void validate() const;
};

struct RandomMode {
  std::uint64_t count = 1;
};

struct InterpolatedMode {
  std::vector<ScenePose> waypoints;
  std::uint32_t frames_per_segment = 1;
};

struct SequenceSpec {
  std::string name = "seq";
  std::uint64_t seed = 0;
  std::variant<RandomMode, InterpolatedMode> mode;

  void validate() const;
};

// Four standard normals, normalized: Haar-uniform on SO(3).
UnitQuaternion uniform_unit_quaternion(DeterministicRng& rng);
// Three standard normals, normalized.
Vec3 uniform_unit_vector(DeterministicRng& rng);

// Draw order: position x, y, z; distance; offset x, y; target orientation;
// background orientation; lighting direction. Fixed entries consume no draws
// for orientations/directions; scalar ranges always consume one draw.
ScenePose sample_pose(const ParameterRanges& ranges, DeterministicRng& rng);
// Frame i uses DeterministicRng(seed, i).
std::vector<ScenePose> sample_random(const ParameterRanges& ranges, std::uint64_t count, std::uint64_t seed);

// Minimal-arc interpolation between unit vectors; antipodal inputs
// (dot < -1 + 1e-9) raise ambiguous_arc.
Vec3 slerp_direction(const Vec3& a, const Vec3& b, double t);

// K frames per consecutive pair at t = j/K plus the final waypoint,
// (n - 1) * K + 1 frames total.
std::vector<ScenePose> interpolate(std::span<const ScenePose> waypoints, std::uint32_t frames_per_segment);

std::vector<ScenePose> build_sequence(const SequenceSpec& spec, const ParameterRanges& ranges);

}  // namespace orbitforge
