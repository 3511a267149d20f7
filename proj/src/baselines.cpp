#include "camsearch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace camsearch {

std::string to_string(BaselinePolicy p) {
  switch (p) {
    case BaselinePolicy::single_step: return "single_step";
    case BaselinePolicy::single_chain: return "single_chain";
    case BaselinePolicy::anchor_best_of_n: return "anchor_best_of_n";
    case BaselinePolicy::random_search: return "random_search";
  }
  return "single_step";
}

std::optional<BaselinePolicy> parse_baseline(std::string_view s) {
  for (auto p : {BaselinePolicy::single_step, BaselinePolicy::single_chain, BaselinePolicy::anchor_best_of_n,
                 BaselinePolicy::random_search})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

namespace {

// Best rendered candidate, preferring ones without a hard failure.
std::optional<int> pick_best(const std::vector<CandidateRecord>& cands) {
  std::optional<int> best;
  auto better = [&](const CandidateRecord& c) {
    if (!best) return true;
    const CandidateRecord& b = cands[*best];
    if (b.hard_failed() != c.hard_failed()) return b.hard_failed();
    return c.score > b.score;
  };
  for (const auto& c : cands)
    if (c.rendered() && better(c)) best = c.index;
  return best;
}

SearchResult one_shot_batch(const SearchContext& ctx, const std::vector<CandidateProposal>& proposals,
                            AdvisorClient& advisor, RenderBackend& renderer, const std::string& method,
                            FallbackLog fallbacks) {
  SearchResult result;
  result.method = method;
  result.fallbacks = std::move(fallbacks);
  RoundRecord rec;
  rec.round = 1;
  rec.candidates = evaluate_candidates(ctx, advisor, renderer, proposals, 1);
  rec.preview_renders = static_cast<int>(proposals.size());
  rec.challenger = pick_best(rec.candidates);
  if (rec.challenger) {
    const CandidateRecord& c = rec.candidates[*rec.challenger];
    result.incumbent = Incumbent{c.proposal.camera, c.preview_path, c.rule, c.visual, c.score, 1, c.index};
  } else {
    result.failure_category = "no_first_image";
  }
  rec.incumbent_after = result.incumbent;
  result.preview_renders = rec.preview_renders;
  std::vector<std::vector<RegionKey>> keys(1);
  for (const auto& c : rec.candidates) {
    keys[0].push_back(c.region);
    result.timings.push_back({{"stage", "preview"}, {"round", 1}, {"candidate", c.index}, {"render_time", c.render_time}});
  }
  if (!keys[0].empty()) result.diagnostics = search_diagnostics(keys);
  result.rounds.push_back(std::move(rec));
  finish_result(result, ctx, advisor, renderer, false);
  return result;
}

}  // namespace

SearchResult run_baseline(BaselinePolicy policy, const MissionSpec& mission, const SceneModel& scene,
                          const SearchConfig& config, AdvisorClient& advisor, RenderBackend& renderer,
                          int random_budget) {
  if (policy == BaselinePolicy::single_chain) {
    SearchConfig chain = config;
    chain.candidates = 1;
    chain.high_explore_enabled = false;
    chain.region_memory_enabled = false;
    SearchResult r = run_search(mission, scene, chain, advisor, renderer);
    r.method = to_string(policy);
    r.log["method"] = r.method;
    if (!config.out_dir.empty()) std::ofstream(config.out_dir / "run.json") << r.log.dump(2) << '\n';
    return r;
  }

  FallbackLog fallbacks;
  const SearchContext ctx = prepare_context(mission, scene, config, advisor, fallbacks);
  std::vector<CandidateProposal> proposals;

  switch (policy) {
    case BaselinePolicy::single_step: {
      const auto top = std::max_element(ctx.bank.begin(), ctx.bank.end(),
                                        [](const Anchor& a, const Anchor& b) { return a.prior < b.prior; });
      proposals.push_back({anchor_camera(*top, mission.aspect_set), "top-prior anchor", SeedOrigin::anchor});
      break;
    }
    case BaselinePolicy::anchor_best_of_n:
      for (const auto& a : ctx.bank) proposals.push_back({anchor_camera(a, mission.aspect_set), "bank anchor", SeedOrigin::anchor});
      break;
    case BaselinePolicy::random_search: {
      if (random_budget < 1) throw std::invalid_argument("random search needs a positive budget");
      Rng rng(mix_seed(config.rng_seed, 0x5eed));
      const Box3d& b = scene.bounds();
      const Vec3 half = 0.75 * b.sizes().cwiseMax(Vec3::Constant(1e-3));
      const Vec3 c = b.center();
      for (int i = 0; i < random_budget; ++i) {
        CameraState cam;
        for (int attempt = 0; attempt < 64; ++attempt) {
          cam.position = c + Vec3(rng.uniform(-1, 1) * half.x(), rng.uniform(-1, 1) * half.y(), rng.uniform(-1, 1) * half.z());
          if (!scene.inside_any(cam.position)) break;
        }
        cam.look_at = scene.objects()[rng.index(scene.objects().size())].center();
        if ((cam.look_at - cam.position).norm() < 1e-6) cam.look_at += Vec3::UnitX();
        cam.focal_mm = std::exp(rng.uniform(std::log(18.0), std::log(85.0)));
        cam.aspect = mission.aspect_set[rng.index(mission.aspect_set.size())];
        proposals.push_back({cam, "uniform random view", SeedOrigin::probe});
      }
      break;
    }
    case BaselinePolicy::single_chain: break;
  }
  return one_shot_batch(ctx, proposals, advisor, renderer, to_string(policy), std::move(fallbacks));
}

}  // namespace camsearch
