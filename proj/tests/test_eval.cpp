#include "camsearch/eval.hpp"
#include "camsearch/synthetic.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <fstream>

using namespace camsearch;

namespace {

TaskResult task(const std::string& id, const std::string& method, double m, const std::string& cat = "subject_placement") {
  TaskResult t;
  t.mission_id = id;
  t.method = method;
  t.category = cat;
  t.completed = true;
  t.scores = ExternalScores{m, m, m, "fixture"};
  return t;
}

TaskResult failed(const std::string& id, const std::string& method) {
  TaskResult t;
  t.mission_id = id;
  t.method = method;
  t.failure_category = "no_first_image";
  return t;
}

}  // namespace

TEST_CASE("quality composite") {
  CHECK(quality_composite({1, 1, 1, ""}) == doctest::Approx(1.0));
  CHECK(quality_composite({.550, .564, .614, ""}) == doctest::Approx(.578).epsilon(0.0015));
  CHECK(quality_composite({.447, .470, .603, ""}) == doctest::Approx(.514).epsilon(0.0015));
  CHECK_THROWS_AS(quality_composite({1.2, 0, 0, ""}), std::invalid_argument);
  CHECK_THROWS_AS(TaskResult{}.m_qs(), std::logic_error);
}

TEST_CASE("success at threshold") {
  CHECK(success_at({task("a", "x", .60), task("b", "x", .50)}) == 0.5);
  CHECK(success_at({task("a", "x", .10), task("b", "x", .50)}) == 0.0);
  CHECK(success_at({task("a", "x", .55)}) == 1.0);
  CHECK_THROWS_AS(success_at({}), std::invalid_argument);
  const std::vector<TaskResult> rs{task("a", "x", .3), task("b", "x", .6), task("c", "x", .8)};
  double prev = 1.0;
  for (double th = 0.0; th <= 1.0; th += 0.05) {
    CHECK(success_at(rs, th) <= prev);
    prev = success_at(rs, th);
  }
}

TEST_CASE("common completed filter") {
  ResultsByMethod by;
  by["a"] = {task("m1", "a", .5), task("m2", "a", .6), task("m3", "a", .7, "atmosphere_style")};
  by["b"] = {task("m1", "b", .5), failed("m2", "b"), task("m3", "b", .7, "atmosphere_style")};
  by["c"] = {task("m3", "c", .4, "atmosphere_style"), task("m2", "c", .1), task("m1", "c", .2)};
  const auto f = common_completed_filter(by);
  CHECK(f.retained == std::vector<std::string>{"m1", "m3"});
  REQUIRE(f.excluded.count("m2"));
  CHECK(f.excluded.at("m2").at("b") == "no_first_image");
  CHECK(f.category_counts.at("atmosphere_style") == 1);
  CHECK(f.category_counts.at("subject_placement") == 1);

  ResultsByMethod permuted;
  permuted["z"] = by["c"];
  permuted["y"] = by["b"];
  permuted["x"] = by["a"];
  std::reverse(permuted["x"].begin(), permuted["x"].end());
  CHECK(common_completed_filter(permuted).retained == f.retained);

  CHECK_THROWS_AS(common_completed_filter({{"a", by["a"]}}), std::invalid_argument);
  ResultsByMethod disjoint{{"a", {task("m1", "a", .5)}}, {"b", {task("m2", "b", .5)}}};
  CHECK(common_completed_filter(disjoint).retained.empty());
}

TEST_CASE("aggregate report") {
  ResultsByMethod by;
  by["a"] = {task("m1", "a", .4), task("m2", "a", .8)};
  by["b"] = {task("m1", "b", .4), task("m2", "b", .6)};
  const auto rep = aggregate_report(by);
  REQUIRE(rep.methods.size() == 2);
  CHECK(rep.methods[0].mean == doctest::Approx(0.6));
  CHECK(rep.methods[0].stddev == doctest::Approx(std::sqrt(0.08)));
  CHECK(rep.methods[0].success == 0.5);
  CHECK(rep.methods[1].mean == doctest::Approx(0.5));
  REQUIRE(rep.wins.size() == 1);
  CHECK(rep.wins[0].wins_a == 1);
  CHECK(rep.wins[0].wins_b == 0);
  CHECK(rep.wins[0].ties == 1);
  CHECK(rep.to_json().at("methods").size() == 2);
  CHECK(rep.to_text().find("paired wins") != std::string::npos);

  const auto single = aggregate_report({{"a", by["a"]}});
  CHECK(single.wins.empty());
  CHECK(single.methods.size() == 1);
}

TEST_CASE("command scorer") {
  fixtures::TempDir dir("scorer");
  const auto good = dir.path / "good.sh";
  std::ofstream(good) << "#!/bin/sh\necho '{\"iaa\": 0.5, \"iqa\": 0.25, \"ista\": 1.0}'\n";
  const auto bad = dir.path / "bad.sh";
  std::ofstream(bad) << "#!/bin/sh\necho '{\"iaa\": 7}'\n";
  for (const auto& p : {good, bad}) std::filesystem::permissions(p, std::filesystem::perms::owner_all);
  auto s = command_scores(good.string(), dir.path / "img.png");
  REQUIRE(s);
  CHECK(s->iqa == 0.25);
  CHECK_FALSE(command_scores(bad.string(), dir.path / "img.png"));
}

TEST_CASE("baselines respect their budgets") {
  const auto suite = synthetic_suite(1);
  const auto& e = suite[0];
  BuiltinRenderer renderer;
  SearchConfig cfg;
  auto run = [&](BaselinePolicy p) {
    ScriptedAdvisor advisor(e.scene, e.mission, 0);
    return run_baseline(p, e.mission, e.scene, cfg, advisor, renderer);
  };
  CHECK(run(BaselinePolicy::single_step).preview_renders == 1);
  CHECK(run(BaselinePolicy::random_search).preview_renders == 24);
  const auto chain = run(BaselinePolicy::single_chain);
  CHECK(chain.preview_renders == 6);
  CHECK(chain.method == "single_chain");
  ScriptedAdvisor advisor(e.scene, e.mission, 0);
  FallbackLog log;
  const auto ctx = prepare_context(e.mission, e.scene, cfg, advisor, log);
  const auto bon = run(BaselinePolicy::anchor_best_of_n);
  CHECK(bon.preview_renders == static_cast<int>(ctx.bank.size()));
  CHECK(bon.completed);
  CHECK(parse_baseline("random_search") == BaselinePolicy::random_search);
  CHECK_FALSE(parse_baseline("grid"));
}

TEST_CASE("run logs score back into task results") {
  fixtures::TempDir dir("logs");
  const auto suite = synthetic_suite(1);
  const auto& e = suite[0];
  SearchConfig cfg;
  cfg.rounds = 2;
  cfg.out_dir = dir.path / "run";
  ScriptedAdvisor advisor(e.scene, e.mission, 0);
  BuiltinRenderer renderer;
  const auto r = run_search(e.mission, e.scene, cfg, advisor, renderer);
  REQUIRE(std::filesystem::exists(cfg.out_dir / "run.json"));
  REQUIRE(std::filesystem::exists(cfg.out_dir / r.final_image_path));
  std::ifstream in(cfg.out_dir / "run.json");
  const auto t = task_result_from_log(json::parse(in), "synthetic", cfg.out_dir);
  CHECK(t.completed);
  CHECK(t.mission_id == e.mission.mission_id);
  CHECK(t.preview_renders == r.preview_renders);
  REQUIRE(t.scores);
  FallbackLog log;
  const auto bp = prepare_context(e.mission, e.scene, cfg, advisor, log).blueprint;
  const auto direct = synthetic_scores(r.final_camera, e.scene, e.mission, bp);
  CHECK(t.scores->iaa == doctest::Approx(direct.iaa));
}
