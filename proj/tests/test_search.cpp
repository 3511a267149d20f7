#include "camsearch/search.hpp"
#include "camsearch/synthetic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <set>

using namespace camsearch;

namespace {

MissionSpec plaza_mission() {
  MissionSpec m;
  m.mission_id = "plaza";
  m.scene_ref = "plaza.json";
  m.instruction = "the statue in the middle of the plaza";
  m.aspect_set = {{16, 9}, {1, 1}};
  m.eval_spec.primary_subject = "hero";
  m.eval_spec.placement_pref = PlacementPref::parse("center");
  m.eval_spec.scale_pref = ScalePref::medium;
  return m;
}

Anchor anchor_at(Vec3 p, double prior) {
  Anchor a;
  a.position = p;
  a.look_at = Vec3(0, 0, 0.5);
  a.prior = prior;
  a.region_key = region_key(p, 1.0);
  return a;
}

}  // namespace

TEST_CASE("internal score") {
  double sum = 0.0;
  for (double w : kInternalWeights) sum += w;
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(internal_score({1, 1, 1, 1, 1, 1}) == 1.0);
  CHECK(internal_score({0.5, 0.5, 0.5, 0.5, 0.5, 0.5}) == 0.5);
  CHECK(internal_score({1, 1, 0.5, 0.5, 0.5, 0.5}) == doctest::Approx(0.60));
  CHECK_THROWS_AS(internal_score({1.1, 0, 0, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(internal_score({0, 0, 0, 0, 0, -0.1}), std::invalid_argument);
}

TEST_CASE("high-explore priority examples") {
  const double h = 1.0;
  RegionMemory memory(h);
  const Anchor far = anchor_at(Vec3(4.5, 0.5, 0.5), 0.5);
  CHECK(*high_explore_priority(far, Vec3(0.5, 0.5, 0.5), memory, h) == doctest::Approx(3.7));

  const Anchor near = anchor_at(Vec3(0.5, 0.5, 0.5), 0.5);
  memory.record_candidate(near.position, 0.7, 0.2, 0.1, false);
  memory.record_candidate(near.position, 0.7, 0.2, 0.1, false);
  REQUIRE(memory.label(near.position) == RegionLabel::promising);
  CHECK(*high_explore_priority(near, near.position, memory, h) == doctest::Approx(-0.35));

  const Anchor doomed = anchor_at(Vec3(8.5, 0.5, 0.5), 5.0);
  memory.record_candidate(doomed.position, 0.1, 0.1, 0.1, false);
  memory.record_candidate(doomed.position, 0.1, 0.1, 0.1, false);
  CHECK_FALSE(high_explore_priority(doomed, Vec3::Zero(), memory, h));

  const std::vector<Anchor> bank{near, far, doomed};
  CHECK(select_high_explore(bank, Vec3(0.5, 0.5, 0.5), memory, h, {}) == 1);
  const std::vector<ForbiddenZone> zones{{far.position, Vec3::Constant(0.5), ZoneOrigin::reviewer}};
  CHECK(select_high_explore(bank, Vec3(0.5, 0.5, 0.5), memory, h, zones) == 0);
  CHECK(select_high_explore(bank, Vec3(0.5, 0.5, 0.5), memory, h, zones) ==
        oracle::high_explore_argmax(bank, Vec3(0.5, 0.5, 0.5), memory, h, zones));
}

TEST_CASE("seed pools hold exactly K seeds") {
  const SceneModel scene = fixtures::plaza();
  const MissionSpec mission = plaza_mission();
  SearchConfig cfg;
  OfflineAdvisor offline;
  FallbackLog log;
  const SearchContext ctx = prepare_context(mission, scene, cfg, offline, log);
  SearchState state{RegionMemory(ctx.h), std::nullopt, {}, std::nullopt, 0.35, 1.0};

  auto pool = build_seed_pool(ctx, state, {}, 1);
  REQUIRE(pool.seeds.size() == 4);
  CHECK(pool.seeds.back().origin == SeedOrigin::high_explore);
  std::set<int> anchors;
  for (const auto& s : pool.seeds) {
    CHECK(s.anchor_index);
    if (s.anchor_index) anchors.insert(*s.anchor_index);
  }
  CHECK(anchors.size() == 4);

  Incumbent inc;
  inc.camera = anchor_camera(ctx.bank[0], mission.aspect_set);
  inc.score = 0.6;
  state.incumbent = inc;
  state.explore_ratio = 0.8;
  pool = build_seed_pool(ctx, state, {}, 2);
  REQUIRE(pool.seeds.size() == 4);
  int exploit = 0, explore = 0;
  for (std::size_t i = 0; i + 1 < pool.seeds.size(); ++i) {
    const auto o = pool.seeds[i].origin;
    (o == SeedOrigin::incumbent || o == SeedOrigin::region ? exploit : explore)++;
  }
  CHECK(exploit <= 1);
  CHECK(explore >= 2);
  CHECK(pool.high_explore_anchor == oracle::high_explore_argmax(ctx.bank, inc.camera.position, state.memory, ctx.h, {}));

  const std::vector<ForbiddenZone> zones{{inc.camera.position, Vec3::Constant(2 * ctx.h), ZoneOrigin::reviewer}};
  pool = build_seed_pool(ctx, state, zones, 3);
  REQUIRE(pool.seeds.size() == 4);
  for (const auto& s : pool.seeds) CHECK_FALSE(inside_any(zones, s.camera.position));

  SearchContext no_hx = ctx;
  no_hx.config.high_explore_enabled = false;
  pool = build_seed_pool(no_hx, state, {}, 2);
  REQUIRE(pool.seeds.size() == 4);
  CHECK_FALSE(pool.high_explore_anchor);
  for (const auto& s : pool.seeds) CHECK(s.origin != SeedOrigin::high_explore);
}

TEST_CASE("final ratio rules") {
  RatioInputs in;
  in.aspect_set = {{16, 9}, {1, 1}};
  in.incumbent_ratio = {1, 1};
  in.scene_extent = Vec3(30, 4, 3);
  in.subject_coverage = 0.03;
  in.subject_box_aspect = 2.5;
  CHECK(select_final_ratio(in).ratio == AspectRatio{16, 9});

  in.incumbent_ratio = {16, 9};
  in.scene_extent = Vec3(5, 5, 5);
  in.subject_coverage = 0.3;
  in.subject_box_aspect = 1.05;
  CHECK(select_final_ratio(in).ratio == AspectRatio{1, 1});

  in.aspect_set = {{3, 2}};
  in.incumbent_ratio = {3, 2};
  CHECK(select_final_ratio(in).ratio == AspectRatio{3, 2});

  in.aspect_set = {{16, 9}, {9, 16}, {1, 1}};
  in.incumbent_ratio = {16, 9};
  in.subject_coverage = 0.1;
  in.subject_box_aspect = 0.4;
  in.tower = true;
  CHECK(select_final_ratio(in).ratio == AspectRatio{9, 16});

  // conflicting votes keep the incumbent ratio
  in.scene_extent = Vec3(30, 4, 3);
  in.subject_coverage = 0.05;
  CHECK(select_final_ratio(in).ratio == AspectRatio{16, 9});
  in.incumbent_ratio = {1, 1};
  CHECK(select_final_ratio(in).ratio == AspectRatio{1, 1});
}

TEST_CASE("search run invariants") {
  const SceneModel scene = fixtures::plaza();
  const MissionSpec mission = plaza_mission();
  SearchConfig cfg;
  cfg.rng_seed = 4;
  ScriptedAdvisor advisor(scene, mission, cfg.rng_seed);
  BuiltinRenderer renderer;
  const auto r = run_search(mission, scene, cfg, advisor, renderer);
  CHECK(r.completed);
  REQUIRE(r.incumbent);
  CHECK(r.rounds.size() == 6);
  CHECK(r.preview_renders <= 24);
  double last = -1.0;
  for (const auto& round : r.rounds) {
    CHECK(round.candidates.size() == 4);
    if (round.incumbent_after) {
      CHECK(round.incumbent_after->score >= last);
      last = round.incumbent_after->score;
    }
    CHECK(std::count_if(round.candidates.begin(), round.candidates.end(), [](const CandidateRecord& c) {
            return c.proposal.seed_origin == SeedOrigin::high_explore;
          }) == 1);
    for (const auto& c : round.candidates) CHECK_FALSE(inside_any(round.zones_active, c.proposal.camera.position));
  }
  REQUIRE(r.final_render);
  CHECK(r.final_render->stats.samples == cfg.render.final_samples);
  CHECK(r.final_render->image.width() == 4 * cfg.render.preview_width);
  CHECK(std::find(mission.aspect_set.begin(), mission.aspect_set.end(), r.final_camera.aspect) != mission.aspect_set.end());
  REQUIRE(r.diagnostics);
  CHECK(r.diagnostics->coverage + r.diagnostics->revisit == 1.0);

  ScriptedAdvisor again_advisor(scene, mission, cfg.rng_seed);
  const auto again = run_search(mission, scene, cfg, again_advisor, renderer);
  CHECK(again.log.dump() == r.log.dump());
  CHECK(again.final_render->image == r.final_render->image);
}

TEST_CASE("offline advisor still completes a search") {
  const SceneModel scene = fixtures::plaza();
  const MissionSpec mission = plaza_mission();
  SearchConfig cfg;
  cfg.rounds = 3;
  OfflineAdvisor advisor;
  BuiltinRenderer renderer;
  const auto r = run_search(mission, scene, cfg, advisor, renderer);
  CHECK(r.completed);
  CHECK(r.preview_renders == 12);
  CHECK_FALSE(r.fallbacks.empty());
}

TEST_CASE("a renderer outage fails the mission") {
  struct Down final : RenderBackend {
    RenderResult render(const SceneModel&, const RenderRequest&) override {
      throw RenderFailure(RenderFailureKind::timeout_no_first_image, "down");
    }
    std::string name() const override { return "down"; }
  } down;
  const SceneModel scene = fixtures::plaza();
  const MissionSpec mission = plaza_mission();
  ScriptedAdvisor advisor(scene, mission, 0);
  const auto r = run_search(mission, scene, SearchConfig{}, advisor, down);
  CHECK_FALSE(r.completed);
  CHECK(r.failure_category == "no_first_image");
  CHECK(r.rounds.size() == 2);
}

TEST_CASE("config validation") {
  SearchConfig c;
  CHECK_NOTHROW(c.validate());
  c.candidates = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("synthetic suite is seeded and consistent") {
  const auto a = synthetic_suite(8);
  const auto b = synthetic_suite(8);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(scene_to_json(a[i].scene).dump() == scene_to_json(b[i].scene).dump());
    CHECK(to_json(a[i].mission).dump() == to_json(b[i].mission).dump());
    CHECK_NOTHROW(validate_mission(a[i].mission, a[i].scene));
  }
  CHECK(a[2].scene.find("tower"));
}
