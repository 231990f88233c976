#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "orbitforge/geometry.hpp"
#include "orbitforge/image.hpp"
#include "orbitforge/mesh.hpp"

namespace orbitforge {

struct RenderOptions {
  double ambient = 0.08;
  double near_plane = 1e-3;  // m
  double far_plane = 1e6;    // m
};

// mask(p) == 255 exactly where depth(p) > 0; background depth is 0.
struct RenderOutput {
  RgbImage color;
  DepthImage depth;
  GrayImage mask;
};

// Z-buffered rasterization with double-sided Lambertian sun shading:
//   albedo * (ambient + (1 - ambient) * max(0, n . -sun))
// Triangles are visited in index order and ties keep the earlier triangle,
// so output is byte-identical for identical inputs.
RenderOutput render(const TriangleMesh& mesh, const ResolvedScene& scene, const CameraIntrinsics& cam,
                    const RenderOptions& options = {});

// Inclusive integer pixel bounds.
struct PixelBox {
  int xmin = 0;
  int ymin = 0;
  int xmax = 0;
  int ymax = 0;
  bool operator==(const PixelBox&) const = default;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
  bool operator==(const PixelPoint&) const = default;
};

struct LabelSet {
  std::optional<PixelBox> bbox;  // absent when nothing is visible
  std::optional<PixelPoint> origin_px;
  Vec3 translation_camera;  // target origin in camera coordinates, m
  UnitQuaternion orientation_camera;
  std::uint64_t visible_pixel_count = 0;
  std::vector<std::optional<PixelPoint>> keypoints;  // projections of model-frame keypoints

  bool visible() const { return visible_pixel_count > 0; }
};

// Tight mask bounds or nullopt for an empty mask.
std::optional<PixelBox> mask_bounds(const GrayImage& mask);

LabelSet derive_labels(const RenderOutput& out, const ResolvedScene& scene, const CameraIntrinsics& cam,
                       std::span<const Vec3> keypoints_model = {});

}  // namespace orbitforge
