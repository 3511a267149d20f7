#include "camsearch/camera.hpp"
#include "camsearch/random.hpp"
#include "fixtures.hpp"

#include <doctest.h>

using namespace camsearch;
using fixtures::box;

namespace {

CameraState looking(Vec3 from, Vec3 at, double f = 50.0, AspectRatio r = {16, 9}) {
  CameraState c;
  c.position = from;
  c.look_at = at;
  c.focal_mm = f;
  c.aspect = r;
  return c;
}

// Pinhole written out from scratch: zero roll, world up +Z, 36 mm sensor width.
Vec2 pinhole(const CameraState& c, const Vec3& p) {
  const Vec3 fwd = (c.look_at - c.position).normalized();
  const Vec3 right = fwd.cross(Vec3(0, 0, 1)).normalized();
  const Vec3 up = right.cross(fwd);
  const Vec3 rel = p - c.position;
  const double x = rel.dot(right), y = rel.dot(up), z = rel.dot(fwd);
  const double half_w = 18.0 / c.focal_mm;
  const double half_h = half_w * c.aspect.height / c.aspect.width;
  return {0.5 + 0.5 * x / z / half_w, 0.5 - 0.5 * y / z / half_h};
}

}  // namespace

TEST_CASE("aspect ratio parsing") {
  auto r = AspectRatio::parse("16:9");
  REQUIRE(r);
  CHECK(r->value() == doctest::Approx(16.0 / 9.0));
  CHECK(AspectRatio{4, 2} == AspectRatio{2, 1});
  CHECK_FALSE(AspectRatio::parse("16x9"));
  CHECK_FALSE(AspectRatio::parse("0:9"));
  CHECK_FALSE(AspectRatio::parse("-1:2"));
}

TEST_CASE("camera validity") {
  CHECK(is_valid(looking({0, -5, 0}, {0, 0, 0})));
  CHECK_FALSE(is_valid(looking({0, 0, 0}, {0, 0, 0})));
  auto c = looking({0, -5, 0}, {0, 0, 0});
  c.focal_mm = 4.0;
  CHECK_FALSE(is_valid(c));
  c.focal_mm = 50;
  c.f_number = 30;
  CHECK_FALSE(is_valid(c));
  CHECK_THROWS_AS(project_point(looking({1, 1, 1}, {1, 1, 1}), Vec3::Zero()), InvalidCamera);
}

TEST_CASE("camera json round trip") {
  const auto c = looking({1.25, -3, 2}, {0, 0.5, 1}, 35, {3, 2});
  const auto back = camera_from_json(to_json(c));
  REQUIRE(back);
  CHECK(back->position == c.position);
  CHECK(back->look_at == c.look_at);
  CHECK(back->aspect == c.aspect);
  CHECK_FALSE(camera_from_json(json{{"position", {1, 2}}}));
}

TEST_CASE("project_point examples") {
  const auto c = looking({0, -5, 0}, {0, 0, 0});
  auto p = project_point(c, Vec3::Zero());
  REQUIRE(p);
  CHECK(p->u == doctest::Approx(0.5));
  CHECK(p->v == doctest::Approx(0.5));
  CHECK(p->depth == doctest::Approx(5.0));
  CHECK_FALSE(project_point(c, Vec3(0, -6, 0)));

  const double tan_half = 18.0 / 50.0;
  p = project_point(c, Vec3(0.5 * tan_half * 5.0, 0, 0));
  REQUIRE(p);
  CHECK(p->u == doctest::Approx(0.75));
}

TEST_CASE("project_point agrees with an independent pinhole") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 from(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-3, 8));
    const Vec3 at(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2));
    const auto c = looking(from, at, rng.uniform(12, 120), i % 2 ? AspectRatio{3, 2} : AspectRatio{9, 16});
    const Vec3 q(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-1, 4));
    const auto p = project_point(c, q);
    const double depth = (q - from).dot((at - from).normalized());
    if (depth <= 1e-6) {
      CHECK_FALSE(p);
      continue;
    }
    REQUIRE(p);
    const Vec2 o = pinhole(c, q);
    CHECK(p->u == doctest::Approx(o.x()).epsilon(1e-9));
    CHECK(p->v == doctest::Approx(o.y()).epsilon(1e-9));
  }
}

TEST_CASE("project_box") {
  const Box3d cube(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  const auto near_box = project_box(looking({0, 10, 0}, {0, 0, 0}), cube);
  CHECK(near_box.center.x() == doctest::Approx(0.5));
  CHECK(near_box.center.y() == doctest::Approx(0.5));
  CHECK(near_box.fully_inside);
  const auto far_box = project_box(looking({0, 20, 0}, {0, 0, 0}), cube);
  CHECK(far_box.coverage < near_box.coverage);

  const auto behind = project_box(looking({0, 10, 0}, {0, 20, 0}), cube);
  CHECK(behind.coverage == 0.0);
  CHECK_FALSE(behind.fully_inside);
  CHECK_FALSE(behind.visible);

  // Straddling the near plane: compare with a dense sampling of the surface.
  const Box3d straddle(Vec3(-0.5, -1, -0.5), Vec3(0.5, 1, 0.5));
  const auto c = looking({0, 0.2, 0}, {0, -5, 0}, 35);
  const auto sb = project_box(c, straddle);
  CHECK(std::isfinite(sb.coverage));
  CHECK(sb.coverage > 0.0);
  double umin = 1, umax = 0, vmin = 1, vmax = 0;
  const int n = 60;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b)
      for (int face = 0; face < 6; ++face) {
        const int axis = face / 2;
        Vec3 q;
        q[axis] = face % 2 ? straddle.max()[axis] : straddle.min()[axis];
        const int ax1 = (axis + 1) % 3, ax2 = (axis + 2) % 3;
        q[ax1] = straddle.min()[ax1] + straddle.sizes()[ax1] * a / n;
        q[ax2] = straddle.min()[ax2] + straddle.sizes()[ax2] * b / n;
        const auto p = project_point(c, q);
        if (!p || p->depth < 1e-3) continue;
        umin = std::min(umin, std::clamp(p->u, 0.0, 1.0));
        umax = std::max(umax, std::clamp(p->u, 0.0, 1.0));
        vmin = std::min(vmin, std::clamp(p->v, 0.0, 1.0));
        vmax = std::max(vmax, std::clamp(p->v, 0.0, 1.0));
      }
  CHECK(sb.u_min <= umin + 1e-6);
  CHECK(sb.u_max >= umax - 1e-6);
  CHECK(sb.v_min <= vmin + 1e-6);
  CHECK(sb.v_max >= vmax - 1e-6);
  CHECK(sb.coverage >= (umax - umin) * (vmax - vmin) - 1e-6);
}

TEST_CASE("rule_m1 examples") {
  const SceneObject subject = box("s", Vec3::Constant(-0.5), Vec3::Constant(0.5));
  const auto centered = looking({0, -6, 0}, {0, 0, 0});
  CHECK(rule_m1(centered, subject, std::nullopt) == 1);
  // center lands at u = 0.7
  const double x = 0.2 * 2 * (18.0 / 50.0) * 6.0;
  const auto offset = looking({-x, -6, 0}, {-x, 0, 0});
  REQUIRE(project_point(offset, Vec3::Zero())->u == doctest::Approx(0.7));
  CHECK(rule_m1(offset, subject, PlacementPref::parse("left")) == 0);
  CHECK(rule_m1(offset, subject, PlacementPref::parse("right")) == 1);
  CHECK(rule_m1(looking({0, 6, 0}, {0, 12, 0}), subject, std::nullopt) == 0);
  CHECK(rule_m1(looking({0, 0, 0}, {0, 0, 0}), subject, std::nullopt) == 0);
}

TEST_CASE("rule_m2 examples") {
  const SceneObject subject = box("s", Vec3::Constant(-0.5), Vec3::Constant(0.5));
  CHECK(rule_m2(looking({0, -6, 0}, {0, 0, 0}), subject, std::nullopt) == doctest::Approx(1.0));
  auto shifted = [&](double du) {
    const double x = du * 2 * (18.0 / 50.0) * 6.0;
    return looking({-x, -6, 0}, {-x, 0, 0});
  };
  CHECK(rule_m2(shifted(0.45), subject, std::nullopt) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rule_m2(shifted(0.225), subject, std::nullopt) == doctest::Approx(0.5));
  CHECK(rule_m2(looking({0, 0, 0}, {0, 0, 0}), subject, std::nullopt) == 0.0);
  CHECK(composition_target(PlacementPref::parse("thirds_left"), {0.9, 0.9}).isApprox(Vec2(1.0 / 3, 2.0 / 3)));
  CHECK(composition_target(PlacementPref::parse("left"), {0.9, 0.9}).isApprox(Vec2(0.5, 0.5)));
}

TEST_CASE("rule_m2 is non-increasing in screen distance") {
  const SceneObject subject = box("s", Vec3::Constant(-0.5), Vec3::Constant(0.5));
  double prev = 2.0;
  for (int i = 0; i <= 50; ++i) {
    const double x = i * 0.01 * 2 * (18.0 / 50.0) * 6.0;
    const double m2 = rule_m2(looking({-x, -6, 0}, {-x, 0, 0}), subject, std::nullopt);
    CHECK(m2 >= 0.0);
    CHECK(m2 <= 1.0);
    CHECK(m2 <= prev + 1e-12);
    prev = m2;
  }
}

TEST_CASE("hard failures") {
  const SceneModel s({box("hero", {-0.5, -0.5, 0}, {0.5, 0.5, 1}), box("wall", {-3, -2.2, 0}, {3, -2, 4})});
  EvaluationSpec spec;
  spec.primary_subject = "hero";
  CHECK(hard_failure_check(looking({0, 0, 0.5}, {0, 5, 0.5}), s, spec) == HardFailure::invalid_camera);
  CHECK(hard_failure_check(looking({0, 0, 0.5}, {0, 0, 0.5}), s, spec) == HardFailure::invalid_camera);
  CHECK(hard_failure_check(looking({0, -8, 0.5}, {0, 0, 0.5}), s, spec) == HardFailure::extreme_occlusion);
  CHECK(occlusion_fraction(Vec3(0, -8, 0.5), s.at("hero"), s) >= 0.9);
  CHECK_FALSE(hard_failure_check(looking({0, 6, 0.5}, {0, 0, 0.5}), s, spec));
  CHECK(occlusion_fraction(Vec3(0, 6, 0.5), s.at("hero"), s) == 0.0);
  CHECK(hard_failure_check(looking({0, 6, 0.5}, {0, 12, 0.5}), s, spec) == HardFailure::subject_missing);

  spec.angle_pref = AnglePref::top;
  CHECK(hard_failure_check(looking({0, 6, 0.5}, {0, 0, 0.5}), s, spec) == HardFailure::view_type_violation);
  spec.hard_fail_conditions = {"invalid_camera"};
  CHECK_FALSE(hard_failure_check(looking({0, 6, 0.5}, {0, 0, 0.5}), s, spec));
}

TEST_CASE("elevation sign") {
  CHECK(elevation_deg(Vec3(0, -1, 1), Vec3::Zero()) == doctest::Approx(45.0));
  CHECK(elevation_deg(Vec3(0, -1, -1), Vec3::Zero()) == doctest::Approx(-45.0));
}
