#include "camsearch/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <thread>

namespace camsearch {

namespace {

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const int threads = std::min<int>(std::max(workers, 1), static_cast<int>(n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

json optional_json(const std::optional<Incumbent>& i) { return i ? to_json(*i) : json(nullptr); }

}  // namespace

void SearchConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (candidates < 1) throw std::invalid_argument("candidates per round must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (!(explore_ratio_init >= kMinExploreRatio && explore_ratio_init <= kMaxExploreRatio))
    throw std::invalid_argument("initial explore ratio outside [0.1, 0.8]");
}

json to_json(const SearchConfig& c) {
  return {{"rounds", c.rounds},
          {"candidates", c.candidates},
          {"explore_ratio_init", c.explore_ratio_init},
          {"workers", c.workers},
          {"rng_seed", c.rng_seed},
          {"high_explore_enabled", c.high_explore_enabled},
          {"region_memory_enabled", c.region_memory_enabled},
          {"fatal_failed_rounds", c.fatal_failed_rounds},
          {"preview_width", c.render.preview_width},
          {"preview_samples", std::min(c.render.preview_samples, kPreviewSampleCap)},
          {"final_samples", c.render.final_samples}};
}

double internal_score(const std::array<double, 6>& m) {
  static constexpr std::array<int, 6> percent{10, 10, 15, 15, 25, 25};
  double sum = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    if (!(m[i] >= 0.0 && m[i] <= 1.0))
      throw std::invalid_argument("signal m" + std::to_string(i + 1) + " outside [0, 1]");
    sum += percent[i] * m[i];
  }
  return sum / 100.0;
}

std::optional<double> high_explore_priority(const Anchor& anchor, const Vec3& target, const RegionMemory& memory,
                                            double h) {
  const RegionRecord& rec = memory.record(memory.key(anchor.position));
  if (rec.label == RegionLabel::dead) return std::nullopt;
  const double u = rec.label == RegionLabel::unknown ? 1.2 : 0.25;
  const double reach = std::min((anchor.position - target).norm() / (2.0 * h), 2.0);
  const double promising = rec.label == RegionLabel::promising ? 1.0 : 0.0;
  return anchor.prior + u + reach - 0.35 * rec.visits - 0.40 * promising;
}

std::optional<int> select_high_explore(const std::vector<Anchor>& bank, const Vec3& target,
                                       const RegionMemory& memory, double h,
                                       const std::vector<ForbiddenZone>& zones) {
  std::optional<int> best;
  double best_s = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (inside_any(zones, bank[i].position)) continue;
    const auto s = high_explore_priority(bank[i], target, memory, h);
    if (s && (!best || *s > best_s)) {
      best = static_cast<int>(i);
      best_s = *s;
    }
  }
  return best;
}

std::array<double, 6> CandidateRecord::signals() const {
  return {double(rule.m1), rule.m2, visual.m3, visual.m4, visual.m5, visual.m6};
}

json to_json(const CandidateRecord& c) {
  json j = {{"index", c.index},
            {"proposal", to_json(c.proposal)},
            {"region", c.region.to_string()},
            {"attempts", c.attempts},
            {"render_failure", c.render_failure ? json(to_string(*c.render_failure)) : json(nullptr)},
            {"preview", c.preview_path}};
  if (c.render_failure) {
    j["failure_message"] = c.failure_message;
    return j;
  }
  j["inside_geometry"] = c.inside_geometry;
  j["rule"] = to_json(c.rule);
  j["visual"] = to_json(c.visual);
  j["score"] = c.score;
  return j;
}

json to_json(const Incumbent& i) {
  return {{"camera", to_json(i.camera)}, {"preview", i.preview_path}, {"rule", to_json(i.rule)},
          {"visual", to_json(i.visual)}, {"score", i.score},          {"round", i.round},
          {"candidate", i.candidate}};
}

json to_json(const RoundRecord& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) seeds.push_back(to_json(s));
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back(to_json(c));
  json zones = json::array();
  for (const auto& z : r.zones_active) zones.push_back(to_json(z));
  json verdict = nullptr;
  if (r.verdict)
    verdict = {{"verdict", to_string(r.verdict->verdict)},
               {"per_dimension", r.verdict->per_dimension},
               {"fallback_used", r.verdict->fallback_used}};
  return {{"round", r.round},
          {"explore_ratio", r.explore_ratio},
          {"step_scale", r.step_scale},
          {"seeds", std::move(seeds)},
          {"high_explore_anchor", r.high_explore_anchor ? json(*r.high_explore_anchor) : json(nullptr)},
          {"candidates", std::move(cands)},
          {"preview_renders", r.preview_renders},
          {"incumbent_before", optional_json(r.incumbent_before)},
          {"incumbent_after", optional_json(r.incumbent_after)},
          {"challenger", r.challenger ? json(*r.challenger) : json(nullptr)},
          {"pairwise", std::move(verdict)},
          {"feedback", to_json(r.feedback)},
          {"forbidden_zones_active", std::move(zones)},
          {"failure_tags", r.failure_tags},
          {"fallbacks", to_json(r.fallbacks)},
          {"memory", r.memory_snapshot}};
}

CameraState anchor_camera(const Anchor& a, const std::vector<AspectRatio>& aspect_set,
                          const std::optional<AspectRatio>& default_ratio) {
  CameraState cam;
  cam.position = a.position;
  cam.look_at = a.look_at;
  cam.focal_mm = std::clamp(a.focal_hint, kMinFocalMm, kMaxFocalMm);
  if (a.aspect_hint) cam.aspect = nearest_ratio(*a.aspect_hint, aspect_set);
  else if (default_ratio) cam.aspect = *default_ratio;
  else if (!aspect_set.empty()) cam.aspect = aspect_set.front();
  return cam;
}

namespace {

CameraState apply_motion(CameraState cam, Motion m, double step, double h) {
  const Vec3 rel = cam.position - cam.look_at;
  switch (m) {
    case Motion::hold: break;
    case Motion::orbit_left:
    case Motion::orbit_right: {
      const double a = (m == Motion::orbit_left ? 1.0 : -1.0) * step * std::numbers::pi / 12.0;
      const Vec3 r(rel.x() * std::cos(a) - rel.y() * std::sin(a), rel.x() * std::sin(a) + rel.y() * std::cos(a), rel.z());
      cam.position = cam.look_at + r;
      break;
    }
    case Motion::push_in: cam.position = cam.look_at + rel * std::pow(0.85, step); break;
    case Motion::pull_out: cam.position = cam.look_at + rel * std::pow(1.15, step); break;
    case Motion::raise: cam.position.z() += 0.25 * h * step; break;
    case Motion::lower: cam.position.z() -= 0.25 * h * step; break;
  }
  return cam;
}

}  // namespace

SeedPool build_seed_pool(const SearchContext& ctx, const SearchState& state, const std::vector<ForbiddenZone>& zones,
                         int round) {
  if (round < 1) throw std::invalid_argument("rounds are numbered from 1");
  const SearchConfig& cfg = ctx.config;
  const auto& aspect_set = ctx.mission.aspect_set;
  const int K = cfg.candidates;
  const double h = ctx.h;
  Rng rng(mix_seed(cfg.rng_seed, 7919 * static_cast<std::uint64_t>(round) + 11));
  SeedPool pool;

  auto free_pos = [&](const Vec3& p) { return !inside_any(zones, p) && !ctx.scene.inside_any(p); };
  const auto& inc = state.incumbent;
  const Vec3 target = inc ? inc->camera.position : ctx.blueprint.look_toward;
  const std::optional<AspectRatio> ratio = inc ? std::optional(inc->camera.aspect) : std::nullopt;

  if (cfg.high_explore_enabled)
    pool.high_explore_anchor = select_high_explore(ctx.bank, target, state.memory, h, zones);
  const int rest = K - (pool.high_explore_anchor ? 1 : 0);

  std::vector<int> by_prior(ctx.bank.size());
  for (std::size_t i = 0; i < by_prior.size(); ++i) by_prior[i] = static_cast<int>(i);
  std::stable_sort(by_prior.begin(), by_prior.end(),
                   [&](int a, int b) { return ctx.bank[a].prior > ctx.bank[b].prior; });
  std::set<int> used;
  if (pool.high_explore_anchor) used.insert(*pool.high_explore_anchor);

  auto next_anchor = [&](bool unvisited_only) -> std::optional<Seed> {
    for (int i : by_prior) {
      const Anchor& a = ctx.bank[i];
      if (used.count(i) || !free_pos(a.position)) continue;
      const RegionRecord& rec = state.memory.record(state.memory.key(a.position));
      if (rec.label == RegionLabel::dead || (unvisited_only && rec.visits > 0)) continue;
      used.insert(i);
      return Seed{anchor_camera(a, aspect_set, ratio), SeedOrigin::anchor, i};
    }
    return std::nullopt;
  };

  const Vec3 centre = ctx.blueprint.look_toward;
  const double probe_radius =
      std::max(h, inc ? 0.9 * (inc->camera.position - centre).norm() : 1.4 * 0.5 * ctx.scene.bounds().sizes().norm());
  auto probe = [&]() -> std::optional<Seed> {
    for (int attempt = 0; attempt < 16; ++attempt) {
      Vec3 dir = rng.unit_vector();
      dir.z() = std::abs(dir.z());
      const Vec3 p = centre + probe_radius * dir;
      if (!free_pos(p)) continue;
      CameraState cam;
      cam.position = p;
      cam.look_at = centre;
      cam.focal_mm = inc ? inc->camera.focal_mm : 35.0;
      cam.aspect = ratio.value_or(aspect_set.front());
      return Seed{cam, SeedOrigin::probe, std::nullopt};
    }
    return std::nullopt;
  };

  int refinements = 0;
  auto refine = [&]() -> std::optional<Seed> {
    if (!inc) return std::nullopt;
    CameraState base = inc->camera;
    if (refinements++ == 0 && state.feedback)
      base = apply_motion(base, state.feedback->preferred_motion, state.step_scale, h);
    const double sigma = state.step_scale * 0.25 * h;
    for (int attempt = 0; attempt < 16; ++attempt) {
      CameraState cam = base;
      cam.position += rng.normal3(sigma);
      cam.look_at += rng.normal3(0.1 * h);
      if (free_pos(cam.position) && is_valid(cam)) return Seed{cam, SeedOrigin::incumbent, std::nullopt};
    }
    return std::nullopt;
  };

  std::vector<Seed>& seeds = pool.seeds;
  auto push = [&](std::optional<Seed> s) {
    if (s) seeds.push_back(std::move(*s));
    return s.has_value();
  };

  if (!inc) {
    while (static_cast<int>(seeds.size()) < rest && push(next_anchor(false))) {
    }
  } else {
    const int n_explore = static_cast<int>(std::lround(state.explore_ratio * rest));
    const int n_exploit = rest - n_explore;

    std::vector<Seed> exploit;
    if (state.feedback)
      for (const auto& c : state.feedback->seed_candidates)
        if (free_pos(c.position) && is_valid(c)) exploit.push_back({c, SeedOrigin::region, std::nullopt});
    if (auto s = refine()) exploit.push_back(*s);
    std::vector<std::pair<RegionKey, double>> promising;
    const RegionKey inc_key = state.memory.key(inc->camera.position);
    for (const auto& [key, rec] : state.memory.records())
      if (rec.label == RegionLabel::promising && key != inc_key) promising.emplace_back(key, rec.best_score);
    std::stable_sort(promising.begin(), promising.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& [key, score] : promising) {
      const Vec3 c = cell_bounds(key, h).center();
      if (!free_pos(c) || (c - inc->camera.look_at).norm() < 1e-6) continue;
      CameraState cam = inc->camera;
      cam.position = c;
      exploit.push_back({cam, SeedOrigin::region, std::nullopt});
    }
    for (int i = 0; i < n_exploit && i < static_cast<int>(exploit.size()); ++i) seeds.push_back(exploit[i]);
    while (static_cast<int>(seeds.size()) < n_exploit && push(refine())) {
    }

    const int target_size = static_cast<int>(seeds.size()) + n_explore;
    bool anchor_turn = true;
    int misses = 0;
    while (static_cast<int>(seeds.size()) < target_size && misses < 2) {
      std::optional<Seed> s;
      if (anchor_turn) {
        s = next_anchor(true);
        if (!s) s = next_anchor(false);
      } else {
        s = probe();
      }
      anchor_turn = !anchor_turn;
      misses = push(std::move(s)) ? 0 : misses + 1;
    }
  }

  while (static_cast<int>(seeds.size()) < rest && (push(probe()) || push(refine()))) {
  }
  if (static_cast<int>(seeds.size()) < rest) pool.notes.push_back("seed pool short; positions forbidden");

  if (pool.high_explore_anchor) {
    const Anchor& a = ctx.bank[*pool.high_explore_anchor];
    seeds.push_back({anchor_camera(a, aspect_set, ratio), SeedOrigin::high_explore, *pool.high_explore_anchor});
  }

  if (seeds.empty()) {
    pool.notes.push_back("all seed positions forbidden; using the highest-prior anchor");
    if (ctx.bank.empty()) throw std::logic_error("seed pool needs a non-empty anchor bank");
    const int i = by_prior.front();
    seeds.push_back({anchor_camera(ctx.bank[i], aspect_set, ratio), SeedOrigin::anchor, i});
  }
  for (std::size_t i = 0; static_cast<int>(seeds.size()) < K; ++i) {
    Seed copy = seeds[i];
    if (copy.origin == SeedOrigin::high_explore) copy.origin = SeedOrigin::anchor;
    seeds.insert(seeds.end() - (pool.high_explore_anchor ? 1 : 0), copy);
  }
  return pool;
}

std::vector<CandidateRecord> evaluate_candidates(const SearchContext& ctx, AdvisorClient& advisor,
                                                 RenderBackend& renderer, const std::vector<CandidateProposal>& proposals,
                                                 int round) {
  const SearchConfig& cfg = ctx.config;
  std::vector<RenderRequest> requests;
  std::vector<CandidateRecord> out(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    CandidateRecord& c = out[i];
    c.index = static_cast<int>(i);
    c.proposal = proposals[i];
    c.region = region_key(proposals[i].camera.position, ctx.h);
    std::filesystem::path path;
    if (!cfg.out_dir.empty()) {
      c.preview_path = "previews/r" + std::to_string(round) + "_c" + std::to_string(i) + ".png";
      path = cfg.out_dir / c.preview_path;
    }
    requests.push_back(make_request(proposals[i].camera, RenderQuality::preview, cfg.render, path));
  }
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir / "previews");

  const auto outcomes = render_parallel(renderer, ctx.scene, requests, cfg.workers);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].attempts = outcomes[i].attempts;
    if (!outcomes[i].ok()) {
      out[i].render_failure = outcomes[i].failure;
      out[i].failure_message = outcomes[i].message;
      out[i].preview_path.clear();
    } else {
      out[i].inside_geometry = outcomes[i].result->inside_geometry;
      out[i].render_time = outcomes[i].result->stats.render_time;
    }
  }

  parallel_for(out.size(), cfg.workers, [&](std::size_t i) {
    CandidateRecord& c = out[i];
    if (!c.rendered()) return;
    const CameraState& cam = c.proposal.camera;
    c.rule = rule_signals(cam, ctx.scene, ctx.mission.eval_spec, ctx.subject_id, cfg.occlusion);
    c.visual = review_image(advisor, cam, c.preview_path, ctx.mission, ctx.blueprint);
    c.score = internal_score(c.signals());
  });
  return out;
}

namespace {

json candidate_brief(const CameraState& cam, double score, const RuleSignals& rule, const VisualReview& visual,
                     const std::string& preview) {
  return {{"camera", to_json(cam)},
          {"score", score},
          {"preview", preview},
          {"rule", to_json(rule)},
          {"visual", {{"m3", visual.m3}, {"m4", visual.m4}, {"m5", visual.m5}, {"m6", visual.m6}}}};
}

}  // namespace

RoundRecord run_round(const SearchContext& ctx, SearchState& state, AdvisorClient& advisor, RenderBackend& renderer,
                      int round) {
  const SearchConfig& cfg = ctx.config;
  RoundRecord rec;
  rec.round = round;
  rec.explore_ratio = state.explore_ratio;
  rec.step_scale = state.step_scale;
  rec.zones_active = forbidden_zones(state.memory, state.reviewer_zones);
  rec.incumbent_before = state.incumbent;

  SeedPool pool = build_seed_pool(ctx, state, rec.zones_active, round);
  for (const auto& note : pool.notes) rec.fallbacks.push_back({AdvisorRole::propose, note});
  rec.seeds = pool.seeds;
  rec.high_explore_anchor = pool.high_explore_anchor;

  ProposalContext pctx;
  pctx.scene = &ctx.scene;
  pctx.aspect_set = ctx.mission.aspect_set;
  pctx.forbidden_zones = rec.zones_active;
  pctx.cell_size = ctx.h;
  pctx.step_scale = state.step_scale;
  pctx.rng_seed = mix_seed(cfg.rng_seed, 31);
  pctx.round = round;
  const auto proposals = propose(advisor, pool.seeds, ctx.blueprint, state.feedback, cfg.candidates, pctx, rec.fallbacks);

  rec.candidates = evaluate_candidates(ctx, advisor, renderer, proposals, round);
  rec.preview_renders = static_cast<int>(proposals.size());

  for (const auto& c : rec.candidates) {
    if (!c.rendered() || c.hard_failed()) continue;
    if (!rec.challenger || c.score > rec.candidates[*rec.challenger].score) rec.challenger = c.index;
  }
  if (rec.challenger) {
    const CandidateRecord& ch = rec.candidates[*rec.challenger];
    Incumbent next{ch.proposal.camera, ch.preview_path, ch.rule, ch.visual, ch.score, round, ch.index};
    bool take = !state.incumbent;
    if (state.incumbent) {
      const auto& inc = *state.incumbent;
      rec.verdict = compare_pairwise(advisor, candidate_brief(inc.camera, inc.score, inc.rule, inc.visual, inc.preview_path),
                                     candidate_brief(ch.proposal.camera, ch.score, ch.rule, ch.visual, ch.preview_path),
                                     rec.fallbacks);
      take = rec.verdict->verdict == PairwiseVerdict::take_challenger;
    }
    if (take) state.incumbent = next;
  }
  rec.incumbent_after = state.incumbent;

  for (const auto& c : rec.candidates) {
    std::string tag = c.rendered() ? (c.hard_failed() ? to_string(*c.rule.hard_failure) : "")
                                   : to_string(*c.render_failure);
    if (!tag.empty() && std::find(rec.failure_tags.begin(), rec.failure_tags.end(), tag) == rec.failure_tags.end())
      rec.failure_tags.push_back(tag);
  }

  const double before = rec.incumbent_before ? rec.incumbent_before->score : 0.0;
  json cand_summary = json::array();
  for (const auto& c : rec.candidates) {
    json s = {{"index", c.index},
              {"position", to_json(c.proposal.camera.position)},
              {"seed_origin", to_string(c.proposal.seed_origin)},
              {"region", c.region.to_string()}};
    if (c.rendered()) {
      s["score"] = c.score;
      s["hard_failure"] = c.hard_failed() ? json(to_string(*c.rule.hard_failure)) : json(nullptr);
      s["review_summary"] = c.visual.summary;
    } else {
      s["render_failure"] = to_string(*c.render_failure);
    }
    cand_summary.push_back(std::move(s));
  }
  const json summary = {{"round", round},
                        {"cell_size", ctx.h},
                        {"incumbent_score_before", before},
                        {"incumbent_score_after", state.incumbent ? state.incumbent->score : 0.0},
                        {"explore_ratio", state.explore_ratio},
                        {"step_scale", state.step_scale},
                        {"failure_tags", rec.failure_tags},
                        {"candidates", std::move(cand_summary)}};
  rec.feedback = reflect_round(advisor, summary, ctx.mission.aspect_set, rec.fallbacks);

  for (const auto& c : rec.candidates) {
    if (!c.rendered()) continue;
    const double delta = rec.incumbent_before ? c.score - before : 0.0;
    state.memory.record_candidate(c.proposal.camera.position, c.score, c.visual.m6, delta, c.hard_failed());
  }
  for (ForbiddenZone z : rec.feedback.forbidden_zones) {
    z.half_extent = z.half_extent.cwiseMin(Vec3::Constant(2.0 * ctx.h));
    z.origin = ZoneOrigin::reviewer;
    state.reviewer_zones.push_back(z);
  }
  state.feedback = rec.feedback;
  state.explore_ratio = rec.feedback.explore_ratio_next;
  state.step_scale = rec.feedback.step_scale;
  rec.memory_snapshot = state.memory.to_json();
  return rec;
}

// ---------------------------------------------------------------------------
// Final aspect ratio

RatioDecision select_final_ratio(const RatioInputs& in) {
  RatioDecision d;
  d.ratio = in.incumbent_ratio;
  if (in.aspect_set.empty()) return d;
  if (in.aspect_set.size() == 1) {
    d.ratio = in.aspect_set.front();
    d.reasons.push_back("single allowed ratio");
    return d;
  }
  AspectRatio widest = in.aspect_set.front(), tallest = widest, squarest = widest;
  for (const auto& r : in.aspect_set) {
    if (r.value() > widest.value()) widest = r;
    if (r.value() < tallest.value()) tallest = r;
    if (std::abs(std::log(r.value())) < std::abs(std::log(squarest.value()))) squarest = r;
  }

  std::vector<std::pair<AspectRatio, std::string>> votes;
  const double horizontal = std::max(in.scene_extent.x(), in.scene_extent.y());
  if (horizontal > 2.0 * in.scene_extent.z() && in.subject_coverage < 0.2)
    votes.emplace_back(widest, "strong horizontal axis with low subject concentration");
  if (in.subject_coverage >= 0.2 && in.subject_box_aspect >= 0.8 && in.subject_box_aspect <= 1.25)
    votes.emplace_back(squarest, "concentrated near-square subject");
  if (in.tower) votes.emplace_back(tallest, "tower structure");
  if (votes.empty()) {
    std::string vibe = in.vibe;
    std::transform(vibe.begin(), vibe.end(), vibe.begin(), [](unsigned char c) { return std::tolower(c); });
    auto has = [&](std::initializer_list<const char*> words) {
      return std::any_of(words.begin(), words.end(), [&](const char* w) { return vibe.find(w) != std::string::npos; });
    };
    if (has({"panoram", "wide", "vast", "expansive", "landscape", "sweeping"}))
      votes.emplace_back(widest, "atmosphere asks for breadth");
    if (has({"towering", "tall", "vertical", "portrait"})) votes.emplace_back(tallest, "atmosphere asks for height");
  }

  std::vector<AspectRatio> distinct;
  for (const auto& [r, why] : votes)
    if (std::find(distinct.begin(), distinct.end(), r) == distinct.end()) distinct.push_back(r);
  if (distinct.size() == 1) {
    d.ratio = distinct.front();
    for (const auto& v : votes) d.reasons.push_back(v.second);
    return d;
  }
  d.reasons.push_back(distinct.empty() ? "no rule fired; keeping the incumbent ratio"
                                       : "conflicting rules; keeping the incumbent ratio");
  if (std::find(in.aspect_set.begin(), in.aspect_set.end(), d.ratio) == in.aspect_set.end())
    d.ratio = nearest_ratio(d.ratio.value(), in.aspect_set);
  return d;
}

RatioInputs ratio_inputs(const SearchContext& ctx, const Incumbent& incumbent) {
  RatioInputs in;
  in.aspect_set = ctx.mission.aspect_set;
  in.incumbent_ratio = incumbent.camera.aspect;
  in.scene_extent = ctx.scene.bounds().sizes();
  in.tower = topology_summary(ctx.scene).vertical_structure == VerticalStructure::tower;
  in.vibe = ctx.blueprint.vibe;
  const SceneObject* subject = ctx.subject_id ? ctx.scene.find(*ctx.subject_id) : nullptr;
  if (subject) {
    const ScreenBox sb = project_box(incumbent.camera, subject->box);
    in.subject_coverage = sb.coverage;
    const double du = sb.u_max - sb.u_min, dv = sb.v_max - sb.v_min;
    if (dv > 0.0) in.subject_box_aspect = du * incumbent.camera.aspect.value() / dv;
  }
  return in;
}

// ---------------------------------------------------------------------------
// Whole search

void finish_result(SearchResult& result, const SearchContext& ctx, AdvisorClient& advisor, RenderBackend& renderer,
                   bool reselect_ratio) {
  const SearchConfig& cfg = ctx.config;
  if (result.incumbent) {
    const Incumbent& inc = *result.incumbent;
    result.ratio.ratio = inc.camera.aspect;
    if (reselect_ratio) {
      const RatioInputs in = ratio_inputs(ctx, inc);
      json ratios = json::array();
      for (const auto& r : in.aspect_set) ratios.push_back(r.to_string());
      const json payload = {{"incumbent", to_json(inc)},
                            {"aspect_set", std::move(ratios)},
                            {"subject_coverage", in.subject_coverage},
                            {"subject_box_aspect", in.subject_box_aspect},
                            {"scene_extent", to_json(in.scene_extent)},
                            {"tower", in.tower},
                            {"vibe", in.vibe}};
      const auto raw = advisor.request(AdvisorRole::final_ratio, payload);
      if (auto r = parse_final_ratio(raw ? std::optional<std::string_view>(*raw) : std::nullopt, in.aspect_set)) {
        result.ratio.ratio = *r;
        result.ratio.advisor_override = true;
        result.ratio.reasons.push_back("advisor choice");
      } else {
        result.ratio = select_final_ratio(in);
      }
    }
    result.final_camera = inc.camera;
    result.final_camera.aspect = result.ratio.ratio;

    std::filesystem::path path;
    if (!cfg.out_dir.empty()) {
      std::filesystem::create_directories(cfg.out_dir);
      result.final_image_path = "final.png";
      path = cfg.out_dir / result.final_image_path;
    }
    const auto outcome = render_parallel(renderer, ctx.scene,
                                         {make_request(result.final_camera, RenderQuality::final, cfg.render, path)}, 1);
    if (outcome[0].ok()) {
      result.final_render = outcome[0].result;
      result.completed = true;
      result.timings.push_back({{"stage", "final"}, {"render_time", outcome[0].result->stats.render_time}});
    } else {
      result.final_image_path.clear();
      result.failure_category = to_string(*outcome[0].failure);
    }
  }

  json rounds = json::array();
  for (const auto& r : result.rounds) rounds.push_back(to_json(r));
  json bank = json::array();
  for (const auto& a : ctx.bank) bank.push_back(to_json(a));
  json final_doc = {{"completed", result.completed},
                    {"failure_category", result.failure_category ? json(*result.failure_category) : json(nullptr)},
                    {"incumbent", optional_json(result.incumbent)}};
  if (result.incumbent) {
    final_doc["camera"] = to_json(result.final_camera);
    final_doc["ratio"] = result.ratio.ratio.to_string();
    final_doc["ratio_reasons"] = result.ratio.reasons;
    final_doc["ratio_advisor_override"] = result.ratio.advisor_override;
  }
  if (result.final_render) {
    final_doc["image"] = result.final_image_path;
    final_doc["resolution"] = {result.final_render->image.width(), result.final_render->image.height()};
    final_doc["samples"] = result.final_render->stats.samples;
    final_doc["backend"] = result.final_render->stats.backend;
  }
  result.log = {{"format_version", 1},
                {"method", result.method},
                {"config", to_json(cfg)},
                {"mission", to_json(ctx.mission)},
                {"scene", scene_to_json(ctx.scene)},
                {"blueprint", to_json(ctx.blueprint)},
                {"cell_size", ctx.h},
                {"anchor_bank", std::move(bank)},
                {"rounds", std::move(rounds)},
                {"preview_renders", result.preview_renders},
                {"preview_budget", cfg.rounds * cfg.candidates},
                {"diagnostics", result.diagnostics ? to_json(*result.diagnostics) : json(nullptr)},
                {"fallbacks", to_json(result.fallbacks)},
                {"final", std::move(final_doc)}};

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream(cfg.out_dir / "run.json") << result.log.dump(2) << '\n';
    std::ofstream(cfg.out_dir / "timings.json") << result.timings.dump(2) << '\n';
  }
}

namespace {

std::vector<Anchor> scout_anchors(const MissionSpec& mission) {
  std::vector<Anchor> out;
  if (!mission.bootstrap.is_object() || !mission.bootstrap.contains("scout_views")) return out;
  const auto& views = mission.bootstrap.at("scout_views");
  if (!views.is_array()) return out;
  for (const auto& v : views) {
    if (!v.is_object()) continue;
    auto p = v.contains("position") ? vec3_from_json(v.at("position")) : std::nullopt;
    auto l = v.contains("look_at") ? vec3_from_json(v.at("look_at")) : std::nullopt;
    if (!p || !l) continue;
    Anchor a;
    a.position = *p;
    a.look_at = *l;
    a.focal_hint = number_field(v, "focal_mm").value_or(35.0);
    out.push_back(a);
  }
  return out;
}

}  // namespace

SearchContext prepare_context(const MissionSpec& mission, const SceneModel& scene, const SearchConfig& config,
                              AdvisorClient& advisor, FallbackLog& log) {
  config.validate();
  validate_mission(mission, scene);
  const TopologySummary topo = topology_summary(scene);
  AdvisedBlueprint advised = build_blueprint_advised(mission, scene, topo, advisor);
  if (advised.failure) log.push_back({AdvisorRole::blueprint, *advised.failure});
  for (const auto& f : advised.fallback_fields) log.push_back({AdvisorRole::blueprint, "field " + f});

  SearchContext ctx{scene, mission, advised.blueprint, {}, config, cell_size(scene.scale()), std::nullopt};
  ctx.bank = build_anchor_bank(scene, ctx.blueprint, topo, scout_anchors(mission));
  ctx.subject_id = mission.eval_spec.primary_subject ? mission.eval_spec.primary_subject : ctx.blueprint.primary_subject;
  return ctx;
}

SearchResult run_search(const MissionSpec& mission, const SceneModel& scene, const SearchConfig& config,
                        AdvisorClient& advisor, RenderBackend& renderer) {
  SearchResult result;
  const SearchContext ctx = prepare_context(mission, scene, config, advisor, result.fallbacks);

  SearchState state{RegionMemory(ctx.h, config.region_memory_enabled), std::nullopt, {}, std::nullopt,
                    config.explore_ratio_init, 1.0};
  int failed_streak = 0;
  std::vector<std::vector<RegionKey>> keys;
  for (int t = 1; t <= config.rounds; ++t) {
    RoundRecord rec = run_round(ctx, state, advisor, renderer, t);
    result.preview_renders += rec.preview_renders;
    keys.emplace_back();
    bool any_rendered = false;
    for (const auto& c : rec.candidates) {
      keys.back().push_back(c.region);
      any_rendered = any_rendered || c.rendered();
      result.timings.push_back({{"stage", "preview"}, {"round", t}, {"candidate", c.index}, {"render_time", c.render_time}});
    }
    result.rounds.push_back(std::move(rec));
    failed_streak = any_rendered ? 0 : failed_streak + 1;
    if (failed_streak >= config.fatal_failed_rounds) {
      result.fallbacks.push_back({AdvisorRole::propose, "renderer outage; search aborted after round " + std::to_string(t)});
      break;
    }
  }

  result.incumbent = state.incumbent;
  if (!result.incumbent) {
    const CandidateRecord* best = nullptr;
    int best_round = 0;
    for (const auto& r : result.rounds)
      for (const auto& c : r.candidates)
        if (c.rendered() && (!best || c.score > best->score)) {
          best = &c;
          best_round = r.round;
        }
    if (best)
      result.incumbent = Incumbent{best->proposal.camera, best->preview_path, best->rule, best->visual,
                                   best->score, best_round, best->index};
    else
      result.failure_category = "no_first_image";
  }
  if (std::any_of(keys.begin(), keys.end(), [](const auto& k) { return !k.empty(); }))
    result.diagnostics = search_diagnostics(keys);

  finish_result(result, ctx, advisor, renderer, true);
  return result;
}

}  // namespace camsearch
