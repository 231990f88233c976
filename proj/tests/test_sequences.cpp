#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "orbitforge/error.hpp"
#include "orbitforge/sequences.hpp"

using namespace orbitforge;

namespace {

constexpr double kPi = std::numbers::pi;
// Upper 0.001 point of chi-square with 19 degrees of freedom.
constexpr double kChi2Crit19 = 43.820;

ScenePose waypoint(double distance, const UnitQuaternion& q, const Vec3& light) {
  ScenePose p;
  p.distance = distance;
  p.target_orientation = q;
  p.lighting_direction = light;
  return p;
}

// Haar measure on SO(3): rotation angle has CDF (theta - sin theta) / pi.
double angle_cdf(double theta) { return (theta - std::sin(theta)) / kPi; }

}  // namespace

TEST_SUITE("sequences") {
  TEST_CASE("interpolated frame count and exact endpoints") {
    const auto q1 = UnitQuaternion::from_axis_angle({0, 1, 0}, 1.0);
    const auto q2 = UnitQuaternion::from_axis_angle({1, 1, 0}, 2.5);
    const std::vector<ScenePose> wps{waypoint(10, UnitQuaternion::identity(), {0, 0, -1}),
                                     waypoint(20, q1, {1, 0, 0}), waypoint(15, q2, {0, -1, 0})};
    for (std::uint32_t k : {1u, 2u, 7u, 10u}) {
      const auto frames = interpolate(wps, k);
      REQUIRE(frames.size() == 2 * k + 1);
      for (std::size_t w = 0; w < wps.size(); ++w) {
        const auto& f = frames[w * k];
        CHECK(f.distance == wps[w].distance);
        CHECK(f.target_orientation == wps[w].target_orientation);
        CHECK(f.lighting_direction.x == wps[w].lighting_direction.x);
      }
    }
  }

  TEST_CASE("10 frames from 10 m to 20 m step by 1 m") {
    const std::vector<ScenePose> wps{waypoint(10, {}, {0, 0, -1}), waypoint(20, {}, {0, 0, -1})};
    const auto frames = interpolate(wps, 10);
    REQUIRE(frames.size() == 11);
    for (int i = 0; i <= 10; ++i) CHECK(frames[i].distance == doctest::Approx(10 + i).epsilon(1e-12));
  }

  TEST_CASE("90 degree slerp has a 45 degree midpoint and constant increments") {
    const auto q0 = UnitQuaternion::identity();
    const auto q1 = UnitQuaternion::from_axis_angle({0, 0, 1}, kPi / 2);
    const auto frames = interpolate(std::vector<ScenePose>{waypoint(10, q0, {0, 0, -1}), waypoint(10, q1, {0, 0, -1})}, 8);
    CHECK(quat_angle_between(frames[4].target_orientation, q0) == doctest::Approx(kPi / 4).epsilon(1e-9));
    for (int i = 0; i < 8; ++i) {
      CHECK(std::abs(quat_angle_between(frames[i].target_orientation, frames[i + 1].target_orientation) - kPi / 16) <=
            1e-7);
    }
  }

  TEST_CASE("light direction follows the great circle") {
    const Vec3 a{1, 0, 0}, b{0, 1, 0};
    for (double t : {0.0, 0.25, 0.5, 0.9, 1.0}) {
      const Vec3 v = slerp_direction(a, b, t);
      CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::atan2(v.y, v.x) == doctest::Approx(t * kPi / 2).epsilon(1e-9));
      CHECK(std::abs(v.z) <= 1e-15);
    }
  }

  TEST_CASE("antipodal lights are rejected") {
    const std::vector<ScenePose> wps{waypoint(10, {}, {0, 0, -1}), waypoint(10, {}, {0, 0, 1})};
    try {
      interpolate(wps, 4);
      FAIL("expected ambiguous_arc");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ambiguous_arc);
    }
    CHECK_THROWS_AS(slerp_direction({1, 0, 0}, {-1, 0, 0}, 0.5), Error);
  }

  TEST_CASE("sampled poses stay inside their ranges") {
    ParameterRanges r;
    r.position = {{-1, -2, -3}, {1, 2, 3}};
    r.distance = {5, 50};
    r.offset = {{0.1, 0.2}, {0.9, 0.8}};
    r.target_orientation.fixed.reset();
    r.lighting_direction.fixed.reset();
    const auto poses = sample_random(r, 2000, 17);
    double dsum = 0;
    for (const auto& p : poses) {
      CHECK((p.position.x >= -1 && p.position.x <= 1 && p.position.y >= -2 && p.position.y <= 2 &&
             p.position.z >= -3 && p.position.z <= 3));
      CHECK((p.distance >= 5 && p.distance <= 50));
      CHECK((p.offset.x >= 0.1 && p.offset.x <= 0.9 && p.offset.y >= 0.2 && p.offset.y <= 0.8));
      CHECK(norm(p.lighting_direction) == doctest::Approx(1).epsilon(1e-12));
      CHECK(p.background_orientation == UnitQuaternion::identity());
      dsum += p.distance;
    }
    // Standard error of the mean is 13 / sqrt(2000) = 0.29.
    CHECK(std::abs(dsum / poses.size() - 27.5) <= 1.5);
  }

  TEST_CASE("frame i depends only on (seed, i)") {
    ParameterRanges r;
    r.distance = {5, 50};
    r.target_orientation.fixed.reset();
    const auto a = sample_random(r, 50, 3);
    const auto b = sample_random(r, 20, 3);
    for (int i = 0; i < 20; ++i) CHECK(a[i].target_orientation == b[i].target_orientation);
    const auto c = sample_random(r, 20, 4);
    CHECK_FALSE(a[0].target_orientation == c[0].target_orientation);
  }

  TEST_CASE("random orientations are Haar-uniform") {
    const int n = 100000;
    DeterministicRng rng(2024, 0);
    std::array<int, 20> bins{};
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      const double theta = quat_rotation_angle(uniform_unit_quaternion(rng));
      sum += theta;
      // Equal-probability bins under the Haar angle law.
      const double u = angle_cdf(theta);
      ++bins[std::min(19, static_cast<int>(u * 20))];
    }
    CHECK(std::abs(sum / n - (kPi / 2 + 2 / kPi)) <= 0.01);
    double chi2 = 0;
    for (int b : bins) chi2 += (b - n / 20.0) * (b - n / 20.0) / (n / 20.0);
    CHECK(chi2 < kChi2Crit19);
  }

  TEST_CASE("random directions cover the sphere evenly") {
    DeterministicRng rng(5, 0);
    std::array<int, 10> bins{};
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
      const Vec3 v = uniform_unit_vector(rng);
      ++bins[std::min(9, static_cast<int>((v.z + 1) / 2 * 10))];
    }
    double chi2 = 0;
    for (int b : bins) chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
    CHECK(chi2 < 27.877);  // 9 dof, 0.001
  }

  TEST_CASE("range and spec validation") {
    ParameterRanges r;
    r.distance = {0, 10};
    CHECK_THROWS_AS(r.validate(), Error);
    r = {};
    r.offset.max = {1.2, 0.5};
    CHECK_THROWS_AS(r.validate(), Error);
    r = {};
    r.position = {{1, 0, 0}, {0, 0, 0}};
    CHECK_THROWS_AS(r.validate(), Error);

    SequenceSpec spec;
    spec.mode = RandomMode{0};
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.mode = InterpolatedMode{{ScenePose{}}, 3};
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.mode = InterpolatedMode{{ScenePose{}, ScenePose{}}, 0};
    CHECK_THROWS_AS(spec.validate(), Error);
    spec.mode = InterpolatedMode{{ScenePose{}, ScenePose{}}, 3};
    CHECK(build_sequence(spec, {}).size() == 4);
  }
}
