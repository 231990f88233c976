#include "orbitforge/geometry.hpp"

#include <algorithm>
#include <string>

#include "orbitforge/error.hpp"

namespace orbitforge {

namespace {

bool finite4(double w, double x, double y, double z) {
  return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

}  // namespace

Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (!v.finite() || !(n > 0.0)) throw Error(ErrorKind::invalid_parameter, "cannot normalize zero or non-finite vector");
  return v / n;
}

UnitQuaternion UnitQuaternion::from_components(double w, double x, double y, double z) {
  if (!finite4(w, x, y, z)) throw Error(ErrorKind::invalid_parameter, "non-finite quaternion component");
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < 1e-12) throw Error(ErrorKind::degenerate_rotation, "quaternion norm below 1e-12");
  return UnitQuaternion(w / n, x / n, y / n, z / n);
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = normalized(axis);
  const double h = 0.5 * angle;
  const double s = std::sin(h);
  return from_components(std::cos(h), a.x * s, a.y * s, a.z * s);
}

UnitQuaternion quat_normalize(double w, double x, double y, double z) {
  return UnitQuaternion::from_components(w, x, y, z);
}

UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion::from_components(a.w() * b.w() - a.x() * b.x() - a.y() * b.y() - a.z() * b.z(),
                                         a.w() * b.x() + a.x() * b.w() + a.y() * b.z() - a.z() * b.y(),
                                         a.w() * b.y() - a.x() * b.z() + a.y() * b.w() + a.z() * b.x(),
                                         a.w() * b.z() + a.x() * b.y() - a.y() * b.x() + a.z() * b.w());
}

UnitQuaternion quat_conjugate(const UnitQuaternion& q) {
  return UnitQuaternion::from_components(q.w(), -q.x(), -q.y(), -q.z());
}

Vec3 quat_rotate_vec(const UnitQuaternion& q, const Vec3& v) {
  // v + 2w(u x v) + 2 u x (u x v), the expanded form of q v q*
  const Vec3 u = q.vec();
  const Vec3 t = 2.0 * cross(u, v);
  return v + q.w() * t + cross(u, t);
}

double quat_dot(const UnitQuaternion& a, const UnitQuaternion& b) {
  return a.w() * b.w() + a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
}

double quat_angle_between(const UnitQuaternion& a, const UnitQuaternion& b) {
  return 2.0 * std::acos(std::min(1.0, std::abs(quat_dot(a, b))));
}

double quat_rotation_angle(const UnitQuaternion& q) {
  return quat_angle_between(UnitQuaternion::identity(), q);
}

bool same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol) {
  const double s = quat_dot(a, b) < 0.0 ? -1.0 : 1.0;
  return std::abs(a.w() - s * b.w()) <= tol && std::abs(a.x() - s * b.x()) <= tol &&
         std::abs(a.y() - s * b.y()) <= tol && std::abs(a.z() - s * b.z()) <= tol;
}

UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::invalid_parameter, "slerp parameter outside [0,1]");
  double d = quat_dot(q0, q1);
  double s1 = 1.0;
  if (d < 0.0) {
    d = -d;
    s1 = -1.0;
  }
  if (t == 0.0) return q0;
  if (t == 1.0) return UnitQuaternion::from_components(s1 * q1.w(), s1 * q1.x(), s1 * q1.y(), s1 * q1.z());

  double a = 1.0 - t;
  double b = t;
  if (d <= 1.0 - 1e-6) {
    const double omega = std::acos(d);
    const double so = std::sin(omega);
    a = std::sin((1.0 - t) * omega) / so;
    b = std::sin(t * omega) / so;
  }
  b *= s1;
  return UnitQuaternion::from_components(a * q0.w() + b * q1.w(), a * q0.x() + b * q1.x(), a * q0.y() + b * q1.y(),
                                         a * q0.z() + b * q1.z());
}

double CameraIntrinsics::focal_length() const {
  return (static_cast<double>(height_px) / 2.0) / std::tan(vertical_fov / 2.0);
}

void CameraIntrinsics::validate() const {
  if (width_px == 0 || height_px == 0) throw Error(ErrorKind::invalid_parameter, "camera resolution must be positive");
  if (!(vertical_fov > 0.0 && vertical_fov < M_PI)) {
    throw Error(ErrorKind::invalid_parameter, "vertical_fov must lie in (0, pi)");
  }
  const double f = focal_length();
  if (!(std::isfinite(f) && f > 0.0)) throw Error(ErrorKind::invalid_parameter, "focal length not finite");
}

void ScenePose::validate() const {
  if (!position.finite()) throw Error(ErrorKind::invalid_parameter, "position must be finite");
  if (!(std::isfinite(distance) && distance > 0.0)) throw Error(ErrorKind::invalid_parameter, "distance must be > 0");
  if (!(offset.x >= 0.0 && offset.x <= 1.0 && offset.y >= 0.0 && offset.y <= 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "offset components must lie in [0,1]");
  }
  if (!lighting_direction.finite() || std::abs(norm(lighting_direction) - 1.0) > 1e-9) {
    throw Error(ErrorKind::invalid_parameter, "lighting_direction must be a unit vector");
  }
}

Vec3 pixel_ray(double u, double v, const CameraIntrinsics& cam) {
  const double f = cam.focal_length();
  const double w2 = static_cast<double>(cam.width_px) / 2.0;
  const double h2 = static_cast<double>(cam.height_px) / 2.0;
  return normalized(Vec3{(u - w2) / f, -(v - h2) / f, -1.0});
}

ResolvedScene resolve_scene(const ScenePose& pose, const CameraIntrinsics& cam) {
  cam.validate();
  pose.validate();
  const Vec3 ray = pixel_ray(pose.offset.x * cam.width_px, pose.offset.y * cam.height_px, cam);

  ResolvedScene scene;
  scene.camera_orientation = pose.background_orientation;
  scene.target_position = pose.position;
  scene.camera_position = pose.position - pose.distance * quat_rotate_vec(pose.background_orientation, ray);
  scene.target_orientation_world = quat_multiply(pose.background_orientation, pose.target_orientation);
  scene.sun_direction_world = quat_rotate_vec(pose.background_orientation, pose.lighting_direction);
  return scene;
}

Vec3 world_to_camera(const Vec3& point_world, const ResolvedScene& scene) {
  return quat_rotate_vec(quat_conjugate(scene.camera_orientation), point_world - scene.camera_position);
}

Projection project(const Vec3& point_world, const ResolvedScene& scene, const CameraIntrinsics& cam) {
  const Vec3 p = world_to_camera(point_world, scene);
  if (!(p.z < 0.0)) throw Error(ErrorKind::behind_camera, "point at or behind the camera plane");
  const double f = cam.focal_length();
  const double depth = -p.z;
  return {static_cast<double>(cam.width_px) / 2.0 + f * (p.x / depth),
          static_cast<double>(cam.height_px) / 2.0 - f * (p.y / depth), depth};
}

}  // namespace orbitforge
