#include "orbitforge/renderer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "orbitforge/error.hpp"

namespace orbitforge {

namespace {

struct CamVertex {
  Vec3 position;  // camera frame
  Vec3 normal;    // camera frame
};

CamVertex lerp(const CamVertex& a, const CamVertex& b, double t) {
  return {a.position + (b.position - a.position) * t, a.normal + (b.normal - a.normal) * t};
}

// Sutherland-Hodgman against the plane depth == near (depth = -z).
int clip_near(const std::array<CamVertex, 3>& in, double near, std::array<CamVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const CamVertex& a = in[i];
    const CamVertex& b = in[(i + 1) % 3];
    const double da = -a.position.z - near;
    const double db = -b.position.z - near;
    if (da >= 0.0) out[n++] = a;
    if ((da >= 0.0) != (db >= 0.0)) out[n++] = lerp(a, b, da / (da - db));
  }
  return n;
}

struct ScreenVertex {
  double sx, sy;
  double inv_depth;
  Vec3 position_over_depth;
  Vec3 normal_over_depth;
};

class Rasterizer {
 public:
  Rasterizer(const CameraIntrinsics& cam, const RenderOptions& opt, const Vec3& sun_cam, RenderOutput& out)
      : cam_(cam), opt_(opt), to_sun_(-sun_cam), out_(out),
        zbuf_(static_cast<std::size_t>(cam.width_px) * cam.height_px, std::numeric_limits<double>::infinity()),
        f_(cam.focal_length()) {}

  void draw(const std::array<CamVertex, 3>& tri, const Rgb& albedo) {
    std::array<CamVertex, 4> poly;
    const int n = clip_near(tri, opt_.near_plane, poly);
    for (int i = 1; i + 1 < n; ++i) draw_clipped({to_screen(poly[0]), to_screen(poly[i]), to_screen(poly[i + 1])}, albedo);
  }

 private:
  ScreenVertex to_screen(const CamVertex& v) const {
    const double depth = -v.position.z;
    const double inv = 1.0 / depth;
    return {cam_.width_px / 2.0 + f_ * v.position.x * inv, cam_.height_px / 2.0 - f_ * v.position.y * inv, inv,
            v.position * inv, v.normal * inv};
  }

  void draw_clipped(const std::array<ScreenVertex, 3>& v, const Rgb& albedo) {
    const double area = (v[1].sx - v[0].sx) * (v[2].sy - v[0].sy) - (v[1].sy - v[0].sy) * (v[2].sx - v[0].sx);
    if (!(std::abs(area) > 0.0) || !std::isfinite(area)) return;

    const double minx = std::min({v[0].sx, v[1].sx, v[2].sx});
    const double maxx = std::max({v[0].sx, v[1].sx, v[2].sx});
    const double miny = std::min({v[0].sy, v[1].sy, v[2].sy});
    const double maxy = std::max({v[0].sy, v[1].sy, v[2].sy});
    const double W = cam_.width_px;
    const double H = cam_.height_px;
    if (maxx < 0.0 || maxy < 0.0 || minx > W || miny > H) return;
    // Clamp in floating point first; near-plane vertices can land far off screen.
    const int x0 = static_cast<int>(std::floor(std::clamp(minx - 0.5, 0.0, W - 1.0)));
    const int x1 = static_cast<int>(std::ceil(std::clamp(maxx - 0.5, 0.0, W - 1.0)));
    const int y0 = static_cast<int>(std::floor(std::clamp(miny - 0.5, 0.0, H - 1.0)));
    const int y1 = static_cast<int>(std::ceil(std::clamp(maxy - 0.5, 0.0, H - 1.0)));

    const double inv_area = 1.0 / area;
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        // Signed sub-areas; all share the sign of `area` inside the triangle.
        const double b0 = ((v[2].sx - v[1].sx) * (py - v[1].sy) - (v[2].sy - v[1].sy) * (px - v[1].sx)) * inv_area;
        const double b1 = ((v[0].sx - v[2].sx) * (py - v[2].sy) - (v[0].sy - v[2].sy) * (px - v[2].sx)) * inv_area;
        const double b2 = 1.0 - b0 - b1;
        if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) continue;

        const double inv_depth = b0 * v[0].inv_depth + b1 * v[1].inv_depth + b2 * v[2].inv_depth;
        if (!(inv_depth > 0.0)) continue;
        const double depth = 1.0 / inv_depth;
        if (!(depth < opt_.far_plane)) continue;
        const std::size_t idx = static_cast<std::size_t>(y) * cam_.width_px + x;
        if (!(depth < zbuf_[idx])) continue;
        zbuf_[idx] = depth;

        const Vec3 pos = (b0 * v[0].position_over_depth + b1 * v[1].position_over_depth +
                          b2 * v[2].position_over_depth) * depth;
        Vec3 n = b0 * v[0].normal_over_depth + b1 * v[1].normal_over_depth + b2 * v[2].normal_over_depth;
        const double len = norm(n);
        n = len > 0.0 ? n / len : Vec3{0.0, 0.0, 1.0};
        if (dot(n, -pos) < 0.0) n = -n;  // double-sided
        const double lambert = std::max(0.0, dot(n, to_sun_));
        const double k = opt_.ambient + (1.0 - opt_.ambient) * lambert;

        out_.depth.at(x, y) = static_cast<float>(depth);
        out_.mask.at(x, y) = 255;
        out_.color.at(x, y, 0) = quantize(albedo.r * k);
        out_.color.at(x, y, 1) = quantize(albedo.g * k);
        out_.color.at(x, y, 2) = quantize(albedo.b * k);
      }
    }
  }

  static std::uint8_t quantize(double value) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(value, 0.0, 1.0)));
  }

  const CameraIntrinsics& cam_;
  const RenderOptions& opt_;
  Vec3 to_sun_;
  RenderOutput& out_;
  std::vector<double> zbuf_;
  double f_;
};

}  // namespace

RenderOutput render(const TriangleMesh& mesh, const ResolvedScene& scene, const CameraIntrinsics& cam,
                    const RenderOptions& options) {
  cam.validate();
  if (!(options.ambient >= 0.0 && options.ambient <= 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "ambient must lie in [0,1]");
  }
  if (!(options.near_plane > 0.0 && options.far_plane > options.near_plane)) {
    throw Error(ErrorKind::invalid_parameter, "need 0 < near_plane < far_plane");
  }

  RenderOutput out{RgbImage(cam.width_px, cam.height_px), DepthImage(cam.width_px, cam.height_px, 0.0f),
                   GrayImage(cam.width_px, cam.height_px)};

  const UnitQuaternion world_to_cam = quat_conjugate(scene.camera_orientation);
  const UnitQuaternion model_to_cam = quat_multiply(world_to_cam, scene.target_orientation_world);
  const Vec3 origin_cam = quat_rotate_vec(world_to_cam, scene.target_position - scene.camera_position);
  const Vec3 sun_cam = quat_rotate_vec(world_to_cam, scene.sun_direction_world);

  std::vector<CamVertex> verts;
  verts.reserve(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    verts.push_back({origin_cam + quat_rotate_vec(model_to_cam, mesh.vertices[i]),
                     quat_rotate_vec(model_to_cam, mesh.vertex_normals[i])});
  }

  Rasterizer raster(cam, options, sun_cam, out);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    raster.draw({verts[tri[0]], verts[tri[1]], verts[tri[2]]}, mesh.triangle_albedo(t));
  }
  return out;
}

std::optional<PixelBox> mask_bounds(const GrayImage& mask) {
  std::optional<PixelBox> box;
  for (std::uint32_t y = 0; y < mask.height(); ++y) {
    for (std::uint32_t x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) == 0) continue;
      const int xi = static_cast<int>(x);
      const int yi = static_cast<int>(y);
      if (!box) {
        box = PixelBox{xi, yi, xi, yi};
      } else {
        box->xmin = std::min(box->xmin, xi);
        box->xmax = std::max(box->xmax, xi);
        box->ymax = yi;
      }
    }
  }
  return box;
}

LabelSet derive_labels(const RenderOutput& out, const ResolvedScene& scene, const CameraIntrinsics& cam,
                       std::span<const Vec3> keypoints_model) {
  LabelSet labels;
  labels.bbox = mask_bounds(out.mask);
  labels.visible_pixel_count = static_cast<std::uint64_t>(
      std::count_if(out.mask.pixels().begin(), out.mask.pixels().end(), [](std::uint8_t m) { return m != 0; }));

  auto try_project = [&](const Vec3& world) -> std::optional<PixelPoint> {
    try {
      const Projection p = project(world, scene, cam);
      return PixelPoint{p.u, p.v};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::behind_camera) throw;
      return std::nullopt;
    }
  };

  labels.origin_px = try_project(scene.target_position);
  labels.translation_camera = world_to_camera(scene.target_position, scene);
  labels.orientation_camera = quat_multiply(quat_conjugate(scene.camera_orientation), scene.target_orientation_world);
  for (const Vec3& k : keypoints_model) {
    labels.keypoints.push_back(
        try_project(scene.target_position + quat_rotate_vec(scene.target_orientation_world, k)));
  }
  return labels;
}

}  // namespace orbitforge
