// Finite-horizon round loop: seed pool, proposals, parallel previews,
// reviewer scoring, pairwise incumbent selection and reflection.
#pragma once

#include "camsearch/advisors.hpp"
#include "camsearch/anchor_bank.hpp"
#include "camsearch/blueprint.hpp"
#include "camsearch/region_memory.hpp"
#include "camsearch/renderer.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace camsearch {

struct SearchConfig {
  int rounds = 6;
  int candidates = 4;
  double explore_ratio_init = 0.35;
  int workers = 1;
  std::uint64_t rng_seed = 0;
  bool high_explore_enabled = true;
  bool region_memory_enabled = true;
  /// Consecutive all-failed rounds that abort the run.
  int fatal_failed_rounds = 2;
  RenderSettings render;
  ScaleBands bands;
  OcclusionConfig occlusion;
  /// Images and logs go here; empty keeps everything in memory.
  std::filesystem::path out_dir;

  /// Throws std::invalid_argument unless rounds >= 1, candidates >= 1, workers >= 1.
  void validate() const;
};
json to_json(const SearchConfig& c);

inline constexpr std::array<double, 6> kInternalWeights{0.10, 0.10, 0.15, 0.15, 0.25, 0.25};

/// Weighted sum of m1..m6. Throws std::invalid_argument for inputs outside [0, 1].
double internal_score(const std::array<double, 6>& m);

/// Anchor priority for the high-explore lane; nullopt when the anchor's
/// region is dead.
std::optional<double> high_explore_priority(const Anchor& anchor, const Vec3& target, const RegionMemory& memory,
                                            double h);

/// Index of the highest-priority anchor outside `zones`, first index on ties.
std::optional<int> select_high_explore(const std::vector<Anchor>& bank, const Vec3& target,
                                       const RegionMemory& memory, double h,
                                       const std::vector<ForbiddenZone>& zones);

struct CandidateRecord {
  int index = 0;
  CandidateProposal proposal;
  RegionKey region;
  int attempts = 0;
  std::optional<RenderFailureKind> render_failure;
  std::string failure_message;
  /// Relative to the run directory; empty when nothing was written.
  std::string preview_path;
  bool inside_geometry = false;
  RuleSignals rule;
  VisualReview visual;
  double score = 0.0;
  /// Wall time; kept out of the run log so logs stay reproducible.
  double render_time = 0.0;

  bool rendered() const { return !render_failure.has_value(); }
  bool hard_failed() const { return rule.hard_failure.has_value(); }
  std::array<double, 6> signals() const;
};
json to_json(const CandidateRecord& c);

struct Incumbent {
  CameraState camera;
  std::string preview_path;
  RuleSignals rule;
  VisualReview visual;
  double score = 0.0;
  int round = 0;
  int candidate = 0;
};
json to_json(const Incumbent& i);

struct RoundRecord {
  int round = 0;
  double explore_ratio = 0.0;
  double step_scale = 1.0;
  std::vector<Seed> seeds;
  std::optional<int> high_explore_anchor;
  std::vector<CandidateRecord> candidates;
  std::optional<Incumbent> incumbent_before;
  std::optional<Incumbent> incumbent_after;
  std::optional<int> challenger;
  std::optional<PairwiseResult> verdict;
  RoundFeedback feedback;
  std::vector<ForbiddenZone> zones_active;
  json memory_snapshot;
  FallbackLog fallbacks;
  std::vector<std::string> failure_tags;
  int preview_renders = 0;
};
json to_json(const RoundRecord& r);

/// Everything fixed for one search.
struct SearchContext {
  const SceneModel& scene;
  const MissionSpec& mission;
  Blueprint blueprint;
  std::vector<Anchor> bank;
  SearchConfig config;
  double h = 1.0;
  std::optional<std::string> subject_id;
};

/// Everything that changes between rounds.
struct SearchState {
  RegionMemory memory;
  std::optional<Incumbent> incumbent;
  std::vector<ForbiddenZone> reviewer_zones;
  std::optional<RoundFeedback> feedback;
  double explore_ratio = 0.35;
  double step_scale = 1.0;
};

struct SeedPool {
  std::vector<Seed> seeds;
  std::optional<int> high_explore_anchor;
  std::vector<std::string> notes;
};

/// Blueprint, anchor bank, cell size and subject for a mission. Blueprint
/// fallbacks are appended to `log`.
SearchContext prepare_context(const MissionSpec& mission, const SceneModel& scene, const SearchConfig& config,
                              AdvisorClient& advisor, FallbackLog& log);

/// Camera for an anchor; the aspect hint maps to the nearest allowed ratio.
CameraState anchor_camera(const Anchor& a, const std::vector<AspectRatio>& aspect_set,
                          const std::optional<AspectRatio>& default_ratio = std::nullopt);

/// Exactly K seeds. Slot K holds the high-explore anchor when the lane is on
/// and some anchor survives; the rest split by explore ratio.
SeedPool build_seed_pool(const SearchContext& ctx, const SearchState& state, const std::vector<ForbiddenZone>& zones,
                         int round);

/// Renders, scores and reviews proposals. Shared by the search and baselines.
std::vector<CandidateRecord> evaluate_candidates(const SearchContext& ctx, AdvisorClient& advisor,
                                                 RenderBackend& renderer, const std::vector<CandidateProposal>& proposals,
                                                 int round);

/// Runs one round and mutates `state`.
RoundRecord run_round(const SearchContext& ctx, SearchState& state, AdvisorClient& advisor, RenderBackend& renderer,
                      int round);

struct RatioInputs {
  std::vector<AspectRatio> aspect_set;
  AspectRatio incumbent_ratio;
  Vec3 scene_extent = Vec3::Ones();
  double subject_coverage = 0.0;
  /// Width over height of the subject's screen box, in pixels.
  double subject_box_aspect = 1.0;
  bool tower = false;
  std::string vibe;
};

struct RatioDecision {
  AspectRatio ratio;
  std::vector<std::string> reasons;
  bool advisor_override = false;
};

/// Rule-based final ratio; ties and conflicts keep the incumbent's ratio.
RatioDecision select_final_ratio(const RatioInputs& in);
RatioInputs ratio_inputs(const SearchContext& ctx, const Incumbent& incumbent);

struct SearchResult {
  std::string method = "closed_loop";
  bool completed = false;
  std::optional<std::string> failure_category;
  std::optional<Incumbent> incumbent;
  CameraState final_camera;
  RatioDecision ratio;
  std::optional<RenderResult> final_render;
  std::string final_image_path;
  std::vector<RoundRecord> rounds;
  int preview_renders = 0;
  std::optional<SearchDiagnostics> diagnostics;
  FallbackLog fallbacks;
  json log;
  json timings = json::array();
};

/// Full search: blueprint, anchor bank, T rounds, final ratio, final render.
/// Writes run.json (and timings.json) into config.out_dir when set.
SearchResult run_search(const MissionSpec& mission, const SceneModel& scene, const SearchConfig& config,
                        AdvisorClient& advisor, RenderBackend& renderer);

/// Final ratio, final render and run log for a chosen incumbent. Used by
/// the search and every baseline.
void finish_result(SearchResult& result, const SearchContext& ctx, AdvisorClient& advisor, RenderBackend& renderer,
                   bool reselect_ratio);

}  // namespace camsearch
