// Proposer, visual reviewer, round reflector and pairwise judge. Every value
// coming back from an advisor is validated and clamped here; malformed or
// missing output takes the documented fallback so the loop stays executable.
#pragma once

#include "camsearch/advisor_client.hpp"
#include "camsearch/blueprint.hpp"
#include "camsearch/camera.hpp"
#include "camsearch/random.hpp"
#include "camsearch/region_memory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace camsearch {

inline constexpr int kAdvisorSchemaVersion = 1;
inline constexpr std::size_t kMaxRationale = 500;
inline constexpr std::size_t kMaxFailureTags = 6;
inline constexpr std::size_t kMaxReviewerZones = 2;
inline constexpr double kMinStepScale = 0.4;
inline constexpr double kMaxStepScale = 1.8;
inline constexpr double kMinExploreRatio = 0.1;
inline constexpr double kMaxExploreRatio = 0.8;
inline constexpr double kNeutralReviewScore = 0.5;

enum class SeedOrigin { incumbent, region, anchor, probe, high_explore, fallback };
std::string to_string(SeedOrigin o);
std::optional<SeedOrigin> parse_seed_origin(std::string_view s);

/// Partially specified camera hypothesis handed to the proposer.
struct Seed {
  CameraState camera;
  SeedOrigin origin = SeedOrigin::anchor;
  std::optional<int> anchor_index;
};
json to_json(const Seed& s);

struct CandidateProposal {
  CameraState camera;
  std::string rationale;
  SeedOrigin seed_origin = SeedOrigin::fallback;
};
json to_json(const CandidateProposal& p);

struct VisualReview {
  double m3 = kNeutralReviewScore;  // composition
  double m4 = kNeutralReviewScore;  // technical quality
  double m5 = kNeutralReviewScore;  // aesthetics
  double m6 = kNeutralReviewScore;  // instruction / blueprint alignment
  std::string reasoning;
  std::string summary;
  bool fallback_used = false;
};
json to_json(const VisualReview& r);

enum class Motion { hold, orbit_left, orbit_right, push_in, pull_out, raise, lower };
std::string to_string(Motion m);

struct RoundFeedback {
  std::string round_review;
  std::string next_strategy;
  double step_scale = 1.0;
  double explore_ratio_next = 0.35;
  Motion preferred_motion = Motion::hold;
  std::vector<std::string> failure_tags;
  std::vector<ForbiddenZone> forbidden_zones;
  std::vector<CameraState> seed_candidates;
  bool fallback_used = false;

  static RoundFeedback neutral();
};
json to_json(const RoundFeedback& f);

enum class PairwiseVerdict { keep_incumbent, take_challenger };
std::string to_string(PairwiseVerdict v);

struct PairwiseResult {
  PairwiseVerdict verdict = PairwiseVerdict::keep_incumbent;
  json per_dimension = json::object();
  bool fallback_used = false;
};

/// Fallback occurrences surfaced into the run log.
struct FallbackEvent {
  AdvisorRole role;
  std::string reason;
};
using FallbackLog = std::vector<FallbackEvent>;
json to_json(const FallbackLog& log);

/// What a proposal must satisfy to be accepted.
struct ProposalContext {
  const SceneModel* scene = nullptr;
  std::vector<AspectRatio> aspect_set;
  std::vector<ForbiddenZone> forbidden_zones;
  double cell_size = 1.0;
  double step_scale = 1.0;
  std::uint64_t rng_seed = 0;
  int round = 1;
};

/// Normalizes an advisor camera: clamps lens values, snaps the ratio to the
/// nearest allowed one. nullopt when the camera cannot be executed.
std::optional<CameraState> normalize_camera(const json& j, const std::vector<AspectRatio>& aspect_set);
AspectRatio nearest_ratio(double value, const std::vector<AspectRatio>& aspect_set);

/// Valid proposals from a raw advisor response (at most k, possibly fewer).
std::vector<CandidateProposal> parse_proposals(std::optional<std::string_view> raw, const ProposalContext& ctx,
                                               const std::vector<Seed>& seeds, int k);
/// Seed position plus Gaussian jitter, resampled away from zones and objects.
/// The spread doubles every 8 rejections; the unmoved seed is the last resort.
CandidateProposal fallback_proposal(const Seed& seed, const ProposalContext& ctx, Rng& rng);

/// Exactly k proposals; shortfalls are topped up from the seeds.
std::vector<CandidateProposal> propose(AdvisorClient& advisor, const std::vector<Seed>& seeds,
                                       const Blueprint& blueprint, const std::optional<RoundFeedback>& last_feedback,
                                       int k, const ProposalContext& ctx, FallbackLog& log);

VisualReview parse_visual_review(std::optional<std::string_view> raw);
VisualReview review_image(AdvisorClient& advisor, const CameraState& camera, const std::string& preview_ref,
                          const MissionSpec& mission, const Blueprint& blueprint);

RoundFeedback parse_round_feedback(std::optional<std::string_view> raw, const std::vector<AspectRatio>& aspect_set);
RoundFeedback reflect_round(AdvisorClient& advisor, const json& round_summary,
                            const std::vector<AspectRatio>& aspect_set, FallbackLog& log);

PairwiseResult parse_pairwise(std::optional<std::string_view> raw);
PairwiseResult compare_pairwise(AdvisorClient& advisor, const json& incumbent, const json& challenger,
                                FallbackLog& log);

std::optional<AspectRatio> parse_final_ratio(std::optional<std::string_view> raw,
                                             const std::vector<AspectRatio>& aspect_set);

/// Geometry-derived proxies for the four visual scores. The scripted
/// reviewer reports these; the synthetic external scorer reuses them.
struct StubSignals {
  double m1 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  double m5 = 0.0;
  double m6 = 0.0;
  double coverage = 0.0;
};

StubSignals stub_visual_signals(const CameraState& cam, const SceneModel& scene, const MissionSpec& mission,
                                const Blueprint& blueprint, const ScaleBands& bands = {});

/// Deterministic advisor for every role. Stateless apart from construction
/// inputs, so concurrent review calls are safe.
class ScriptedAdvisor final : public AdvisorClient {
 public:
  ScriptedAdvisor(const SceneModel& scene, MissionSpec mission, std::uint64_t seed, ScaleBands bands = {});

  std::optional<std::string> request(AdvisorRole role, const json& payload) override;

  /// Pairwise margin: take the challenger only when it beats the incumbent's J by more than this.
  static constexpr double kPairwiseMargin = 0.02;

 private:
  json propose(const json& payload) const;
  json review(const json& payload) const;
  json reflect(const json& payload) const;
  json compare(const json& payload) const;

  const SceneModel& scene_;
  MissionSpec mission_;
  Blueprint blueprint_;
  std::uint64_t seed_;
  ScaleBands bands_;
};

/// HTTP advisor speaking {role, payload, schema_version}. One retry, then
/// nullopt so callers fall back.
class RemoteAdvisor final : public AdvisorClient {
 public:
  /// `url` like "http://host:port/path".
  explicit RemoteAdvisor(std::string url, int timeout_seconds = 60);
  std::optional<std::string> request(AdvisorRole role, const json& payload) override;

  static json wire_request(AdvisorRole role, const json& payload);

 private:
  std::string host_;
  int port_ = 80;
  std::string path_;
  int timeout_seconds_;
};

}  // namespace camsearch
