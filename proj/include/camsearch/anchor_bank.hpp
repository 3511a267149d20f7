#pragma once

#include "camsearch/blueprint.hpp"
#include "camsearch/region_memory.hpp"
#include "camsearch/scene.hpp"

#include <optional>
#include <vector>

namespace camsearch {

enum class AnchorSource { bbox_heuristic, look_toward, visibility, scout_relocation };
std::string to_string(AnchorSource s);

/// Coarse camera seed fixed before local search begins.
struct Anchor {
  Vec3 position = Vec3::Zero();
  Vec3 look_at = Vec3::Zero();
  double focal_hint = 35.0;
  /// Preferred width/height ratio; the search maps it to the nearest allowed ratio.
  std::optional<double> aspect_hint;
  double prior = 0.0;
  AnchorSource source = AnchorSource::bbox_heuristic;
  RegionKey region_key;
  double visibility = 1.0;
};

json to_json(const Anchor& a);

struct AnchorBankConfig {
  double ring_radius_factor = 1.4;
  double eye_height_fraction = 0.12;
  double elevated_angle_deg = 35.0;
  int max_look_toward = 4;
  int max_visibility = 4;
  int visibility_grid_xy = 8;
  int visibility_grid_z = 3;
};

/// 0.5 * source base + 0.5 * subject visibility.
double anchor_prior(AnchorSource source, double visibility);

/// Focal length (mm) that fits a sphere of `radius` seen from `distance`
/// across the horizontal field of view, clamped to the lens range.
double framing_focal(double radius, double distance);

/// Deterministic bank: 8 eye-height ring anchors, 4 elevated, 1 top-down, up
/// to 4 look-toward and 4 visibility anchors, then scout relocation anchors.
/// Anchors inside objects move to the nearest free cell center; duplicates by
/// region key are dropped in construction order. Throws ValidationError on an
/// empty scene.
std::vector<Anchor> build_anchor_bank(const SceneModel& scene, const Blueprint& blueprint,
                                      const TopologySummary& topo, const std::vector<Anchor>& scout_anchors = {},
                                      const AnchorBankConfig& config = {});

}  // namespace camsearch
