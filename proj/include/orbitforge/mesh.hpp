#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "orbitforge/geometry.hpp"

namespace orbitforge {

struct Rgb {
  double r = 0.8;
  double g = 0.8;
  double b = 0.8;
  bool operator==(const Rgb&) const = default;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;                           // model frame, m
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counter-clockwise when seen from outside
  std::vector<Vec3> vertex_normals;                     // unit, one per vertex
  Rgb albedo;
  std::vector<Rgb> face_albedo;  // empty, or one per triangle

  // Indices in range, at least one triangle, unit normals, albedo in [0,1].
  void validate() const;
  const Rgb& triangle_albedo(std::size_t tri) const { return face_albedo.empty() ? albedo : face_albedo[tri]; }
};

// Wavefront OBJ subset: v, vn and f records. Polygons are fan-triangulated,
// corners are deduplicated on (position, normal) pairs, and corners without
// an explicit normal receive the average of their adjacent face normals.
// Texture, grouping and material records are ignored.
TriangleMesh parse_obj(std::string_view text, std::string_view source = "<memory>");
TriangleMesh load_mesh(const std::filesystem::path& path);

}  // namespace orbitforge
