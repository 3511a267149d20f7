// Mission tuple and the soft photographic blueprint derived from it.
#pragma once

#include "camsearch/advisor_client.hpp"
#include "camsearch/camera.hpp"
#include "camsearch/evaluation.hpp"
#include "camsearch/scene.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace camsearch {

enum class MissionCategory { subject_placement, relational_composition, atmosphere_style };
std::string to_string(MissionCategory c);
std::optional<MissionCategory> parse_mission_category(std::string_view s);

/// (scene, instruction, bootstrap, aspect set, evaluation spec).
struct MissionSpec {
  std::string mission_id;
  MissionCategory category = MissionCategory::subject_placement;
  std::string scene_ref;
  std::string instruction;
  json bootstrap = json::object();
  std::vector<AspectRatio> aspect_set;
  EvaluationSpec eval_spec;
};

inline constexpr int kMissionFormatVersion = 1;

std::vector<MissionSpec> parse_missions(std::string_view text);
std::vector<MissionSpec> load_missions(const std::filesystem::path& path);
json to_json(const MissionSpec& m);
json missions_to_json(const std::vector<MissionSpec>& missions);
/// Throws ValidationError when the evaluation spec names ids absent from the scene.
void validate_mission(const MissionSpec& mission, const SceneModel& scene);

enum class CompositionCue { thirds, center, leading_lines, frame_within_frame };
enum class ZonePref { ground, elevated, aerial, interior };
enum class Axis { x, y, z };

std::string to_string(CompositionCue c);
std::string to_string(ZonePref z);
std::string to_string(Axis a);

/// Soft preferences. Nothing here constrains the search; fields only bias it.
struct Blueprint {
  std::optional<std::string> primary_subject;
  std::vector<std::string> context_objects;
  std::vector<CompositionCue> composition_cues;
  AnglePref angle_pref = AnglePref::eye;
  ZonePref zone_pref = ZonePref::ground;
  Vec3 look_toward = Vec3::Zero();
  std::optional<Axis> axis_pref;
  std::optional<bool> symmetry_pref;
  std::string vibe;
  std::vector<std::string> negatives;

  bool wants_thirds() const;
};

json to_json(const Blueprint& b);

Blueprint build_blueprint_rule_based(const MissionSpec& mission, const SceneModel& scene,
                                     const TopologySummary& topo);

struct AdvisedBlueprint {
  Blueprint blueprint;
  /// Fields replaced by the rule-based value.
  std::vector<std::string> fallback_fields;
  /// Set when the whole response was unusable.
  std::optional<std::string> failure;
};

/// Advisor response validated field by field; invalid fields fall back to the
/// rule-based builder.
AdvisedBlueprint build_blueprint_advised(const MissionSpec& mission, const SceneModel& scene,
                                         const TopologySummary& topo, AdvisorClient& advisor);

/// Field-level validation against a rule-based default. Exposed for fuzzing.
AdvisedBlueprint merge_blueprint_response(std::optional<std::string_view> raw, const Blueprint& fallback,
                                          const SceneModel& scene);

}  // namespace camsearch
