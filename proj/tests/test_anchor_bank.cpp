#include "camsearch/anchor_bank.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <set>

using namespace camsearch;
using fixtures::box;

namespace {

std::vector<Anchor> bank_for(const SceneModel& s, const std::string& subject) {
  MissionSpec m;
  m.mission_id = "m";
  m.aspect_set = {{16, 9}};
  m.eval_spec.primary_subject = subject;
  const auto topo = topology_summary(s);
  return build_anchor_bank(s, build_blueprint_rule_based(m, s, topo), topo);
}

}  // namespace

TEST_CASE("anchor priors") {
  CHECK(anchor_prior(AnchorSource::visibility, 1.0) == doctest::Approx(0.85));
  CHECK(anchor_prior(AnchorSource::bbox_heuristic, 0.0) == doctest::Approx(0.20));
}

TEST_CASE("cell size") {
  CHECK(cell_size(10) == doctest::Approx(1.2));
  CHECK(cell_size(5) == doctest::Approx(0.9));
  CHECK(cell_size(7.5) == doctest::Approx(0.9));
  CHECK_THROWS_AS(cell_size(0), std::invalid_argument);
}

TEST_CASE("bank structure") {
  const SceneModel s = fixtures::plaza();
  const auto bank = bank_for(s, "hero");
  REQUIRE(bank.size() >= 8);
  const double h = cell_size(s.scale());
  std::set<RegionKey> keys;
  for (const auto& a : bank) {
    CHECK_FALSE(s.inside_any(a.position));
    CHECK(keys.insert(a.region_key).second);
    CHECK(a.region_key == region_key(a.position, h));
    CHECK(a.prior >= 0.0);
    CHECK(a.prior <= 1.0);
    CHECK((a.position - a.look_at).norm() > 1e-6);
  }
  const auto again = bank_for(s, "hero");
  REQUIRE(again.size() == bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) CHECK(to_json(again[i]).dump() == to_json(bank[i]).dump());
  CHECK_THROWS_AS(build_anchor_bank(SceneModel{}, Blueprint{}, TopologySummary{}), ValidationError);
}

TEST_CASE("ring anchors of a symmetric cube are mirror-symmetric") {
  const auto bank = bank_for(fixtures::single_cube(), "cube");
  std::vector<Vec3> ring;
  for (const auto& a : bank)
    if (a.source == AnchorSource::bbox_heuristic && ring.size() < 8) ring.push_back(a.position);
  REQUIRE(ring.size() == 8);
  for (const auto& p : ring) {
    bool mirrored = false;
    for (const auto& q : ring) mirrored = mirrored || (q - Vec3(-p.x(), p.y(), p.z())).norm() < 1e-9;
    CHECK(mirrored);
  }
}

TEST_CASE("visibility anchors favor the open side of a walled subject") {
  // Walls on -x, +x and -y; the +y side is open.
  const SceneModel s({box("hero", {-0.5, -0.5, 0}, {0.5, 0.5, 1}), box("w_west", {-2.2, -2.2, 0}, {-2, 2, 4}),
                      box("w_east", {2, -2.2, 0}, {2.2, 2, 4}), box("w_south", {-2.2, -2.2, 0}, {2.2, -2, 4})});
  const auto bank = bank_for(s, "hero");
  int vis = 0, open_side = 0;
  for (const auto& a : bank)
    if (a.source == AnchorSource::visibility) {
      ++vis;
      if (a.position.y() > -2.0) ++open_side;
    }
  REQUIRE(vis > 0);
  CHECK(open_side == vis);
}

TEST_CASE("scout anchors join the bank") {
  const SceneModel s = fixtures::plaza();
  MissionSpec m;
  m.eval_spec.primary_subject = "hero";
  const auto topo = topology_summary(s);
  Anchor scout;
  scout.position = Vec3(0, -9, 3);
  scout.look_at = Vec3(0, 0, 0.5);
  const auto bank = build_anchor_bank(s, build_blueprint_rule_based(m, s, topo), topo, {scout});
  CHECK(std::any_of(bank.begin(), bank.end(), [](const Anchor& a) { return a.source == AnchorSource::scout_relocation; }));
}
