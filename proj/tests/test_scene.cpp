#include "camsearch/scene.hpp"
#include "fixtures.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace camsearch;
using fixtures::box;

namespace {

std::string scene_doc(const std::string& objects) {
  return R"({"format_version": 1, "objects": [)" + objects + "]}";
}

}  // namespace

TEST_CASE("scene scale is the largest edge of the union box") {
  CHECK(SceneModel({box("a", {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5})}).scale() == doctest::Approx(1.0));
  const SceneModel two({box("a", {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}), box("b", {8.5, -0.5, -0.5}, {9.5, 0.5, 0.5})});
  CHECK(two.scale() == doctest::Approx(10.0));
  CHECK(two.bounds().min().x() == doctest::Approx(-0.5));
  CHECK(two.bounds().max().x() == doctest::Approx(9.5));
}

TEST_CASE("scene validation") {
  CHECK_THROWS_AS(SceneModel(std::vector<SceneObject>{}), ValidationError);
  CHECK_THROWS_AS(SceneModel({box("a", {0, 0, 0}, {1, 1, 1}), box("a", {2, 0, 0}, {3, 1, 1})}), ValidationError);
  CHECK_THROWS_AS(SceneModel({box("a", {1, 0, 0}, {0, 1, 1})}), ValidationError);
}

TEST_CASE("parse errors carry context") {
  const auto missing = scene_doc(R"({"id": "crate7", "label": "crate", "aabb_min": [0, 0, 0]})");
  try {
    parse_scene(missing);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("crate7") != std::string::npos);
    CHECK(std::string(e.what()).find("aabb_max") != std::string::npos);
  }
  try {
    parse_scene("{\n\"format_version\": 1,\n\"objects\": [ oops ]\n}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scene(scene_doc("")), ValidationError);
  CHECK_THROWS_AS(parse_scene(R"({"format_version": 2, "objects": []})"), ParseError);
}

TEST_CASE("scene json round trip") {
  const SceneModel s = fixtures::plaza();
  const SceneModel back = parse_scene(scene_to_json(s).dump());
  REQUIRE(back.objects().size() == s.objects().size());
  for (std::size_t i = 0; i < s.objects().size(); ++i) {
    CHECK(back.objects()[i].id == s.objects()[i].id);
    CHECK(back.objects()[i].box.min() == s.objects()[i].box.min());
    CHECK(back.objects()[i].box.max() == s.objects()[i].box.max());
  }
  CHECK(scene_to_json(back).dump() == scene_to_json(s).dump());
}

TEST_CASE("inside_any is strict") {
  const SceneModel s = fixtures::single_cube();
  CHECK(s.inside_any(Vec3(0, 0, 0)));
  CHECK_FALSE(s.inside_any(Vec3(1, 0, 0)));
  CHECK_FALSE(s.inside_any(Vec3(2, 0, 0)));
}

TEST_CASE("geometric summary") {
  const SceneModel s({box("z", {0, 0, 0}, {2, 1, 1}), box("a", {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5})});
  const auto sum = geometric_summary(s);
  REQUIRE(sum.size() == 2);
  CHECK(sum[0].id == "a");
  CHECK(sum[0].volume == doctest::Approx(1.0));
  CHECK(sum[0].center.isZero());
  CHECK(sum[1].center.isApprox(Vec3(1.0, 0.5, 0.5)));
  CHECK(sum[1].volume == doctest::Approx(2.0));
  CHECK(summary_to_json(sum).dump() == summary_to_json(geometric_summary(s)).dump());
}

TEST_CASE("topology summary") {
  SUBCASE("single object") {
    const auto t = topology_summary(fixtures::single_cube());
    REQUIRE(t.dominant_objects.size() == 1);
    CHECK(t.dominant_objects[0] == "cube");
    CHECK(t.foreground_ids == std::vector<std::string>{"cube"});
    CHECK(t.vertical_structure == VerticalStructure::flat);
  }
  SUBCASE("tall thin box is a tower") {
    const SceneModel s({box("slab", {-3, -3, 0}, {-1, -1, 0.5}), box("pad", {1, 1, 0}, {3, 3, 0.3}),
                        box("spire", {0, -3, 0}, {1, -2, 5})});
    const auto t = topology_summary(s);
    CHECK(t.vertical_structure == VerticalStructure::tower);
    CHECK(t.dominant_objects.front() == "spire");
  }
  SUBCASE("empty center of a 2x2 grid is open") {
    const SceneModel s({box("a", {-3, -3, 0}, {-1, -1, 2}), box("b", {1, -3, 0}, {3, -1, 2}),
                        box("c", {-3, 1, 0}, {-1, 3, 2}), box("d", {1, 1, 0}, {3, 3, 2})});
    const auto t = topology_summary(s);
    bool near_center = false;
    for (const auto& p : t.open_regions) near_center = near_center || Vec2(p.x(), p.y()).norm() < 1.0;
    CHECK(near_center);
    CHECK(t.dominant_objects == std::vector<std::string>{"a", "b", "c", "d"});
  }
}
