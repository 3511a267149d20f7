#include "camsearch/advisors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace camsearch {

std::string to_string(SeedOrigin o) {
  switch (o) {
    case SeedOrigin::incumbent: return "incumbent";
    case SeedOrigin::region: return "region";
    case SeedOrigin::anchor: return "anchor";
    case SeedOrigin::probe: return "probe";
    case SeedOrigin::high_explore: return "high_explore";
    case SeedOrigin::fallback: return "fallback";
  }
  return "fallback";
}

std::optional<SeedOrigin> parse_seed_origin(std::string_view s) {
  for (auto o : {SeedOrigin::incumbent, SeedOrigin::region, SeedOrigin::anchor, SeedOrigin::probe,
                 SeedOrigin::high_explore, SeedOrigin::fallback})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

json to_json(const Seed& s) {
  return {{"camera", to_json(s.camera)},
          {"origin", to_string(s.origin)},
          {"anchor_index", s.anchor_index ? json(*s.anchor_index) : json(nullptr)}};
}

json to_json(const CandidateProposal& p) {
  return {{"camera", to_json(p.camera)}, {"rationale", p.rationale}, {"seed_origin", to_string(p.seed_origin)}};
}

json to_json(const VisualReview& r) {
  return {{"m3", r.m3},           {"m4", r.m4},           {"m5", r.m5}, {"m6", r.m6},
          {"reasoning", r.reasoning}, {"summary", r.summary}, {"fallback_used", r.fallback_used}};
}

std::string to_string(Motion m) {
  switch (m) {
    case Motion::hold: return "hold";
    case Motion::orbit_left: return "orbit_left";
    case Motion::orbit_right: return "orbit_right";
    case Motion::push_in: return "push_in";
    case Motion::pull_out: return "pull_out";
    case Motion::raise: return "raise";
    case Motion::lower: return "lower";
  }
  return "hold";
}

namespace {

std::optional<Motion> parse_motion(std::string_view s) {
  for (auto m : {Motion::hold, Motion::orbit_left, Motion::orbit_right, Motion::push_in, Motion::pull_out,
                 Motion::raise, Motion::lower})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

std::optional<json> parse_object(std::optional<std::string_view> raw) {
  if (!raw) return std::nullopt;
  json j = json::parse(raw->begin(), raw->end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

std::string bounded_string(const json& obj, const char* key, std::size_t max_len) {
  auto s = string_field(obj, key);
  return s ? s->substr(0, max_len) : std::string();
}

}  // namespace

RoundFeedback RoundFeedback::neutral() { return RoundFeedback{}; }

json to_json(const RoundFeedback& f) {
  json zones = json::array();
  for (const auto& z : f.forbidden_zones) zones.push_back(to_json(z));
  json seeds = json::array();
  for (const auto& c : f.seed_candidates) seeds.push_back(to_json(c));
  return {{"round_review", f.round_review},
          {"next_strategy", f.next_strategy},
          {"step_scale", f.step_scale},
          {"explore_ratio_next", f.explore_ratio_next},
          {"preferred_motion", to_string(f.preferred_motion)},
          {"failure_tags", f.failure_tags},
          {"forbidden_zones", std::move(zones)},
          {"seed_candidates", std::move(seeds)},
          {"fallback_used", f.fallback_used}};
}

std::string to_string(PairwiseVerdict v) {
  return v == PairwiseVerdict::take_challenger ? "take_challenger" : "keep_incumbent";
}

json to_json(const FallbackLog& log) {
  json arr = json::array();
  for (const auto& e : log) arr.push_back({{"role", to_string(e.role)}, {"reason", e.reason}});
  return arr;
}

AspectRatio nearest_ratio(double value, const std::vector<AspectRatio>& aspect_set) {
  if (aspect_set.empty()) return AspectRatio{};
  AspectRatio best = aspect_set.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& r : aspect_set) {
    const double d = std::abs(std::log(r.value()) - std::log(value));
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

std::optional<CameraState> normalize_camera(const json& j, const std::vector<AspectRatio>& aspect_set) {
  if (!j.is_object()) return std::nullopt;
  auto p = j.contains("position") ? vec3_from_json(j.at("position")) : std::nullopt;
  auto l = j.contains("look_at") ? vec3_from_json(j.at("look_at")) : std::nullopt;
  if (!p || !l || (*p - *l).norm() <= 1e-9) return std::nullopt;
  CameraState cam;
  cam.position = *p;
  cam.look_at = *l;
  cam.focal_mm = std::clamp(number_field(j, "focal_mm").value_or(35.0), kMinFocalMm, kMaxFocalMm);
  cam.f_number = std::clamp(number_field(j, "f_number").value_or(4.0), kMinFNumber, kMaxFNumber);
  std::optional<AspectRatio> ratio;
  if (auto s = string_field(j, "aspect")) ratio = AspectRatio::parse(*s);
  if (aspect_set.empty()) return std::nullopt;
  cam.aspect = ratio ? nearest_ratio(ratio->value(), aspect_set) : aspect_set.front();
  return cam;
}

namespace {

bool proposal_allowed(const CameraState& cam, const ProposalContext& ctx) {
  return is_valid(cam) && !inside_any(ctx.forbidden_zones, cam.position);
}

}  // namespace

std::vector<CandidateProposal> parse_proposals(std::optional<std::string_view> raw, const ProposalContext& ctx,
                                               const std::vector<Seed>& seeds, int k) {
  std::vector<CandidateProposal> out;
  auto doc = parse_object(raw);
  if (!doc || !doc->contains("proposals") || !doc->at("proposals").is_array()) return out;
  const auto& arr = doc->at("proposals");
  for (std::size_t i = 0; i < arr.size() && static_cast<int>(out.size()) < k; ++i) {
    const auto& item = arr[i];
    if (!item.is_object() || !item.contains("camera")) continue;
    auto cam = normalize_camera(item.at("camera"), ctx.aspect_set);
    if (!cam || !proposal_allowed(*cam, ctx)) continue;
    CandidateProposal p;
    p.camera = *cam;
    p.rationale = bounded_string(item, "rationale", kMaxRationale);
    std::optional<SeedOrigin> origin;
    if (auto s = string_field(item, "seed_origin")) origin = parse_seed_origin(*s);
    if (!origin && !seeds.empty()) origin = seeds[out.size() % seeds.size()].origin;
    p.seed_origin = origin.value_or(SeedOrigin::anchor);
    out.push_back(std::move(p));
  }
  return out;
}

CandidateProposal fallback_proposal(const Seed& seed, const ProposalContext& ctx, Rng& rng) {
  CandidateProposal p;
  p.camera = seed.camera;
  p.seed_origin = seed.origin == SeedOrigin::high_explore ? SeedOrigin::high_explore : SeedOrigin::fallback;
  p.rationale = "fallback perturbation of " + to_string(seed.origin) + " seed";
  double sigma_pos = 0.25 * ctx.cell_size * ctx.step_scale;
  const double sigma_look = 0.1 * ctx.cell_size;
  for (int attempt = 0; attempt < 32; ++attempt) {
    if (attempt > 0 && attempt % 8 == 0) sigma_pos *= 2.0;
    CameraState cam = seed.camera;
    cam.position += rng.normal3(sigma_pos);
    cam.look_at += rng.normal3(sigma_look);
    const bool blocked = ctx.scene && ctx.scene->inside_any(cam.position);
    if (proposal_allowed(cam, ctx) && !blocked) {
      p.camera = cam;
      return p;
    }
  }
  return p;
}

std::vector<CandidateProposal> propose(AdvisorClient& advisor, const std::vector<Seed>& seeds,
                                       const Blueprint& blueprint, const std::optional<RoundFeedback>& last_feedback,
                                       int k, const ProposalContext& ctx, FallbackLog& log) {
  if (k < 1 || seeds.empty()) throw std::invalid_argument("propose needs k >= 1 and a non-empty seed pool");
  json seed_arr = json::array();
  for (const auto& s : seeds) seed_arr.push_back(to_json(s));
  json zones = json::array();
  for (const auto& z : ctx.forbidden_zones) zones.push_back(to_json(z));
  json ratios = json::array();
  for (const auto& r : ctx.aspect_set) ratios.push_back(r.to_string());
  const json payload = {{"round", ctx.round},
                        {"k", k},
                        {"seeds", std::move(seed_arr)},
                        {"blueprint", to_json(blueprint)},
                        {"feedback", last_feedback ? to_json(*last_feedback) : json(nullptr)},
                        {"step_scale", ctx.step_scale},
                        {"cell_size", ctx.cell_size},
                        {"forbidden_zones", std::move(zones)},
                        {"aspect_set", std::move(ratios)}};
  const auto raw = advisor.request(AdvisorRole::propose, payload);
  auto out = parse_proposals(raw ? std::optional<std::string_view>(*raw) : std::nullopt, ctx, seeds, k);

  if (static_cast<int>(out.size()) < k) {
    log.push_back({AdvisorRole::propose, !raw ? "advisor unreachable"
                                              : "short by " + std::to_string(k - out.size()) + " proposals"});
    Rng rng(mix_seed(ctx.rng_seed, 1000 + ctx.round));
    for (int i = static_cast<int>(out.size()); i < k; ++i) out.push_back(fallback_proposal(seeds[i % seeds.size()], ctx, rng));
  }

  // The high-explore lane is forced: exactly one proposal carries it when the
  // pool contains a high-explore seed.
  const auto hx_seed = std::find_if(seeds.begin(), seeds.end(), [](const Seed& s) { return s.origin == SeedOrigin::high_explore; });
  bool seen_hx = false;
  for (auto& p : out) {
    if (p.seed_origin != SeedOrigin::high_explore) continue;
    if (hx_seed == seeds.end() || seen_hx) p.seed_origin = SeedOrigin::anchor;
    seen_hx = true;
  }
  if (hx_seed != seeds.end() && !seen_hx) {
    log.push_back({AdvisorRole::propose, "high-explore lane restored from seed"});
    CandidateProposal p;
    p.camera = hx_seed->camera;
    p.seed_origin = SeedOrigin::high_explore;
    p.rationale = "high-explore anchor passthrough";
    out.back() = p;
  }
  return out;
}

VisualReview parse_visual_review(std::optional<std::string_view> raw) {
  VisualReview fallback;
  fallback.fallback_used = true;
  fallback.summary = "unparseable review; neutral scores";
  auto doc = parse_object(raw);
  if (!doc) return fallback;
  // code fields m1..m4 carry the image-side scores m3..m6
  const auto a = number_field(*doc, "m1");
  const auto b = number_field(*doc, "m2");
  const auto c = number_field(*doc, "m3");
  const auto d = number_field(*doc, "m4");
  if (!a || !b || !c || !d) return fallback;
  VisualReview r;
  r.m3 = std::clamp(*a, 0.0, 1.0);
  r.m4 = std::clamp(*b, 0.0, 1.0);
  r.m5 = std::clamp(*c, 0.0, 1.0);
  r.m6 = std::clamp(*d, 0.0, 1.0);
  r.reasoning = bounded_string(*doc, "reasoning", 4000);
  r.summary = bounded_string(*doc, "summary", 1000);
  return r;
}

VisualReview review_image(AdvisorClient& advisor, const CameraState& camera, const std::string& preview_ref,
                          const MissionSpec& mission, const Blueprint& blueprint) {
  const json payload = {{"camera", to_json(camera)},
                        {"preview", preview_ref},
                        {"instruction", mission.instruction},
                        {"eval_spec", to_json(mission.eval_spec)},
                        {"blueprint", to_json(blueprint)}};
  const auto raw = advisor.request(AdvisorRole::review, payload);
  return parse_visual_review(raw ? std::optional<std::string_view>(*raw) : std::nullopt);
}

RoundFeedback parse_round_feedback(std::optional<std::string_view> raw, const std::vector<AspectRatio>& aspect_set) {
  RoundFeedback f = RoundFeedback::neutral();
  auto doc = parse_object(raw);
  if (!doc) {
    f.fallback_used = true;
    f.round_review = "unparseable feedback; neutral settings";
    return f;
  }
  const json& j = *doc;
  f.round_review = bounded_string(j, "round_review", 2000);
  f.next_strategy = bounded_string(j, "next_strategy", 2000);
  if (auto s = number_field(j, "step_scale")) f.step_scale = std::clamp(*s, kMinStepScale, kMaxStepScale);
  if (auto e = number_field(j, "explore_ratio_next"))
    f.explore_ratio_next = std::clamp(*e, kMinExploreRatio, kMaxExploreRatio);
  if (auto m = string_field(j, "preferred_motion")) f.preferred_motion = parse_motion(*m).value_or(Motion::hold);

  if (j.contains("failure_tags") && j.at("failure_tags").is_array()) {
    for (const auto& t : j.at("failure_tags")) {
      if (f.failure_tags.size() >= kMaxFailureTags) break;
      if (t.is_string()) f.failure_tags.push_back(t.get<std::string>().substr(0, 64));
    }
  }
  if (j.contains("forbidden_zones") && j.at("forbidden_zones").is_array()) {
    for (const auto& z : j.at("forbidden_zones")) {
      if (f.forbidden_zones.size() >= kMaxReviewerZones) break;
      if (!z.is_object()) continue;
      auto c = z.contains("center") ? vec3_from_json(z.at("center")) : std::nullopt;
      auto h = z.contains("half_extent") ? vec3_from_json(z.at("half_extent")) : std::nullopt;
      if (!c || !h || !(h->array() > 0.0).all()) continue;
      f.forbidden_zones.push_back({*c, *h, ZoneOrigin::reviewer});
    }
  }
  const char* seed_key = j.contains("candidates") ? "candidates" : "seed_candidates";
  if (j.contains(seed_key) && j.at(seed_key).is_array()) {
    for (const auto& c : j.at(seed_key)) {
      if (f.seed_candidates.size() >= 8) break;
      const json& cam_json = c.is_object() && c.contains("camera") ? c.at("camera") : c;
      if (auto cam = normalize_camera(cam_json, aspect_set); cam && is_valid(*cam)) f.seed_candidates.push_back(*cam);
    }
  }
  return f;
}

RoundFeedback reflect_round(AdvisorClient& advisor, const json& round_summary,
                            const std::vector<AspectRatio>& aspect_set, FallbackLog& log) {
  const auto raw = advisor.request(AdvisorRole::reflect, round_summary);
  auto f = parse_round_feedback(raw ? std::optional<std::string_view>(*raw) : std::nullopt, aspect_set);
  if (f.fallback_used) log.push_back({AdvisorRole::reflect, raw ? "malformed feedback" : "advisor unreachable"});
  return f;
}

PairwiseResult parse_pairwise(std::optional<std::string_view> raw) {
  PairwiseResult r;
  auto doc = parse_object(raw);
  const auto verdict = doc ? string_field(*doc, "verdict") : std::nullopt;
  if (!verdict || (*verdict != "take_challenger" && *verdict != "keep_incumbent")) {
    r.fallback_used = true;
    return r;
  }
  r.verdict = *verdict == "take_challenger" ? PairwiseVerdict::take_challenger : PairwiseVerdict::keep_incumbent;
  if (doc->contains("per_dimension") && doc->at("per_dimension").is_object()) r.per_dimension = doc->at("per_dimension");
  return r;
}

PairwiseResult compare_pairwise(AdvisorClient& advisor, const json& incumbent, const json& challenger,
                                FallbackLog& log) {
  const auto raw = advisor.request(AdvisorRole::compare, {{"incumbent", incumbent}, {"challenger", challenger}});
  auto r = parse_pairwise(raw ? std::optional<std::string_view>(*raw) : std::nullopt);
  if (r.fallback_used) log.push_back({AdvisorRole::compare, "unparseable verdict; keeping incumbent"});
  return r;
}

std::optional<AspectRatio> parse_final_ratio(std::optional<std::string_view> raw,
                                             const std::vector<AspectRatio>& aspect_set) {
  auto doc = parse_object(raw);
  if (!doc) return std::nullopt;
  auto s = string_field(*doc, "ratio");
  if (!s) return std::nullopt;
  auto r = AspectRatio::parse(*s);
  if (!r || std::find(aspect_set.begin(), aspect_set.end(), *r) == aspect_set.end()) return std::nullopt;
  return r;
}

// ---------------------------------------------------------------------------
// Scripted advisor

namespace {

double window_match(double value, double lo, double hi, double falloff) {
  if (value >= lo && value <= hi) return 1.0;
  const double gap = value < lo ? lo - value : value - hi;
  return std::max(0.0, 1.0 - gap / falloff);
}

}  // namespace

StubSignals stub_visual_signals(const CameraState& cam, const SceneModel& scene, const MissionSpec& mission,
                                const Blueprint& blueprint, const ScaleBands& bands) {
  StubSignals s;
  if (!is_valid(cam) || scene.inside_any(cam.position)) return s;
  const SceneObject* subject = blueprint.primary_subject ? scene.find(*blueprint.primary_subject) : nullptr;
  const Vec3 target = subject ? subject->center() : blueprint.look_toward;
  const ScreenBox sb = subject ? project_box(cam, subject->box) : ScreenBox{};
  s.coverage = sb.coverage;

  const auto center = project_point(cam, target);
  const bool in_frame = center && center->u >= 0 && center->u <= 1 && center->v >= 0 && center->v <= 1;
  s.m1 = subject ? rule_m1(cam, *subject, mission.eval_spec.placement_pref) : (in_frame ? 1.0 : 0.0);

  std::optional<PlacementPref> cue = mission.eval_spec.placement_pref;
  if (!cue || !cue->thirds) cue = blueprint.wants_thirds() ? std::optional(PlacementPref{{}, {}, true}) : std::nullopt;
  if (in_frame) {
    const Vec2 uv(center->u, center->v);
    s.m3 = std::max(0.0, 1.0 - (uv - composition_target(cue, uv)).norm() / 0.45);
  }

  if (subject && sb.raw_area > 0.0) {
    const bool behind = !project_point(cam, subject->center());
    s.m4 = behind ? 0.0 : std::clamp(sb.coverage / sb.raw_area, 0.0, 1.0);
  }

  const CoverageBand band = bands.band(mission.eval_spec.scale_pref.value_or(ScalePref::medium));
  const double peak = band.peak();
  if (subject) {
    s.m5 = s.coverage <= peak ? s.coverage / peak : std::max(0.0, 1.0 - (s.coverage - peak) / (1.0 - peak));
    const double band_match = band.contains(s.coverage)
                                  ? 1.0
                                  : (s.coverage < band.lo ? s.coverage / band.lo
                                                          : std::max(0.0, 1.0 - (s.coverage - band.hi) / band.hi));
    const AngleWindow w = preferred_elevation(blueprint.angle_pref);
    const double angle_match = window_match(elevation_deg(cam.position, target), w.lo, w.hi, 30.0);
    s.m6 = (s.m1 + band_match + angle_match) / 3.0;
  }
  s.m3 = std::clamp(s.m3, 0.0, 1.0);
  s.m5 = std::clamp(s.m5, 0.0, 1.0);
  s.m6 = std::clamp(s.m6, 0.0, 1.0);
  return s;
}

ScriptedAdvisor::ScriptedAdvisor(const SceneModel& scene, MissionSpec mission, std::uint64_t seed, ScaleBands bands)
    : scene_(scene), mission_(std::move(mission)), seed_(seed), bands_(bands) {
  blueprint_ = build_blueprint_rule_based(mission_, scene_, topology_summary(scene_));
}

std::optional<std::string> ScriptedAdvisor::request(AdvisorRole role, const json& payload) {
  switch (role) {
    case AdvisorRole::blueprint: return to_json(blueprint_).dump();
    case AdvisorRole::propose: return propose(payload).dump();
    case AdvisorRole::review: return review(payload).dump();
    case AdvisorRole::reflect: return reflect(payload).dump();
    case AdvisorRole::compare: return compare(payload).dump();
    case AdvisorRole::final_ratio: return json::object().dump();
  }
  return std::nullopt;
}

json ScriptedAdvisor::propose(const json& payload) const {
  const int round = payload.value("round", 1);
  const double h = payload.value("cell_size", 1.0);
  const double step = payload.value("step_scale", 1.0);
  std::vector<ForbiddenZone> zones;
  for (const auto& z : payload.value("forbidden_zones", json::array()))
    zones.push_back({*vec3_from_json(z.at("center")), *vec3_from_json(z.at("half_extent")), ZoneOrigin::reviewer});

  Rng rng(mix_seed(seed_, 17 + round));
  json proposals = json::array();
  const int k = payload.value("k", 1);
  const auto& seeds = payload.at("seeds");
  for (std::size_t i = 0; i < seeds.size() && static_cast<int>(i) < k; ++i) {
    const auto seed_cam = camera_from_json(seeds[i].at("camera"));
    if (!seed_cam) continue;
    const std::string origin = seeds[i].value("origin", "anchor");
    CameraState cam = *seed_cam;
    for (int attempt = 0; attempt < 16; ++attempt) {
      CameraState trial = *seed_cam;
      trial.position += rng.normal3(0.25 * h * step);
      trial.look_at += rng.normal3(0.1 * h);
      trial.focal_mm = std::clamp(seed_cam->focal_mm * std::exp(0.15 * step * rng.normal()), kMinFocalMm, kMaxFocalMm);
      if (is_valid(trial) && !inside_any(zones, trial.position) && !scene_.inside_any(trial.position)) {
        cam = trial;
        break;
      }
    }
    proposals.push_back({{"camera", to_json(cam)},
                         {"rationale", "perturbed " + origin + " seed"},
                         {"seed_origin", origin}});
  }
  return {{"proposals", std::move(proposals)}};
}

json ScriptedAdvisor::review(const json& payload) const {
  const auto cam = camera_from_json(payload.at("camera"));
  StubSignals s;
  if (cam) {
    try {
      s = stub_visual_signals(*cam, scene_, mission_, blueprint_, bands_);
    } catch (const InvalidCamera&) {
    }
  }
  return {{"m1", s.m3},
          {"m2", s.m4},
          {"m3", s.m5},
          {"m4", s.m6},
          {"reasoning", "projection-derived scores"},
          {"summary", "coverage " + std::to_string(s.coverage)}};
}

json ScriptedAdvisor::reflect(const json& payload) const {
  const double before = payload.value("incumbent_score_before", 0.0);
  const int round = payload.value("round", 1);
  const double h = payload.value("cell_size", 1.0);
  double best = 0.0;
  json tags = json::array();
  json zones = json::array();
  for (const auto& c : payload.value("candidates", json::array())) {
    best = std::max(best, c.value("score", 0.0));
    if (c.contains("hard_failure") && c.at("hard_failure").is_string()) {
      const std::string tag = c.at("hard_failure").get<std::string>();
      if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(tag);
      if ((tag == "invalid_camera" || tag == "subject_missing") && zones.size() < kMaxReviewerZones) {
        if (auto p = vec3_from_json(c.at("position")))
          zones.push_back({{"center", to_json(*p)}, {"half_extent", to_json(Vec3::Constant(0.25 * h))}});
      }
    }
  }
  const bool improved = best > before + kPairwiseMargin;
  if (!improved) tags.push_back("stagnation");
  return {{"round_review", improved ? "round improved the incumbent" : "no improvement this round"},
          {"next_strategy", improved ? "refine around the incumbent" : "widen search and relocate"},
          {"step_scale", improved ? 0.8 : 1.4},
          {"explore_ratio_next", improved ? 0.3 : 0.55},
          {"preferred_motion", improved ? "hold" : (round % 2 ? "orbit_left" : "orbit_right")},
          {"failure_tags", std::move(tags)},
          {"forbidden_zones", std::move(zones)}};
}

json ScriptedAdvisor::compare(const json& payload) const {
  const double inc = payload.at("incumbent").value("score", 0.0);
  const double chal = payload.at("challenger").value("score", 0.0);
  const bool take = chal > inc + kPairwiseMargin;
  return {{"verdict", take ? "take_challenger" : "keep_incumbent"},
          {"per_dimension", {{"internal_score", take ? "challenger" : "incumbent"}}}};
}

}  // namespace camsearch
