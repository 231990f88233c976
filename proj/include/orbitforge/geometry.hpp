#pragma once

#include <cmath>
#include <cstdint>

namespace orbitforge {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr bool operator==(const Vec3&) const = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
// Throws invalid_parameter for zero-length or non-finite input.
Vec3 normalized(const Vec3& v);

// Hamilton-convention unit quaternion, scalar first. Every constructor
// renormalizes, so the norm stays within 1e-9 of one.
class UnitQuaternion {
 public:
  constexpr UnitQuaternion() = default;

  // Normalizes (w, x, y, z); norm below 1e-12 is a degenerate_rotation error.
  static UnitQuaternion from_components(double w, double x, double y, double z);
  // Right-handed rotation of `angle` radians about `axis` (need not be unit).
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
  static constexpr UnitQuaternion identity() { return {}; }

  constexpr double w() const { return w_; }
  constexpr double x() const { return x_; }
  constexpr double y() const { return y_; }
  constexpr double z() const { return z_; }
  constexpr Vec3 vec() const { return {x_, y_, z_}; }

  bool operator==(const UnitQuaternion&) const = default;

 private:
  constexpr UnitQuaternion(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {}

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

UnitQuaternion quat_normalize(double w, double x, double y, double z);
UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b);
UnitQuaternion quat_conjugate(const UnitQuaternion& q);
// q v q^-1 with v treated as a pure quaternion.
Vec3 quat_rotate_vec(const UnitQuaternion& q, const Vec3& v);
double quat_dot(const UnitQuaternion& a, const UnitQuaternion& b);
// Geodesic angle of the relative rotation, 2 acos |<a, b>|, in [0, pi].
double quat_angle_between(const UnitQuaternion& a, const UnitQuaternion& b);
// Rotation angle of q itself in [0, pi].
double quat_rotation_angle(const UnitQuaternion& q);
// True when a and b are the same rotation (sign-insensitive) within tol.
bool same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol = 1e-9);

// Shortest-arc spherical interpolation; t outside [0,1] is invalid_parameter.
UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1, double t);

struct CameraIntrinsics {
  std::uint32_t width_px = 512;
  std::uint32_t height_px = 512;
  double vertical_fov = 1.0471975511965976;  // 60 degrees

  // (height/2) / tan(fov/2)
  double focal_length() const;
  void validate() const;
};

struct NormalizedOffset {
  double x = 0.5;
  double y = 0.5;
  bool operator==(const NormalizedOffset&) const = default;
};

// The six scene parameters for one frame.
struct ScenePose {
  Vec3 position;                            // target in world, m
  double distance = 10.0;                   // camera to target, m
  NormalizedOffset offset;                  // where the target origin lands, [0,1]^2
  UnitQuaternion target_orientation;        // target w.r.t. camera
  UnitQuaternion background_orientation;    // camera w.r.t. world
  Vec3 lighting_direction{0.0, 0.0, -1.0};  // camera frame, from the sun toward the scene

  void validate() const;
};

struct ResolvedScene {
  Vec3 camera_position;
  UnitQuaternion camera_orientation;  // camera -> world
  Vec3 target_position;
  UnitQuaternion target_orientation_world;
  Vec3 sun_direction_world;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // positive z-depth along the optical axis, m
};

// Camera looks down -Z with +X right and +Y up. The target origin is
// placed on the ray through pixel (offset.x * W, offset.y * H).
ResolvedScene resolve_scene(const ScenePose& pose, const CameraIntrinsics& cam);

// Unit ray in camera coordinates through image point (u, v).
Vec3 pixel_ray(double u, double v, const CameraIntrinsics& cam);

Vec3 world_to_camera(const Vec3& point_world, const ResolvedScene& scene);

// Pinhole projection; points with camera z >= 0 raise behind_camera.
Projection project(const Vec3& point_world, const ResolvedScene& scene, const CameraIntrinsics& cam);

}  // namespace orbitforge
