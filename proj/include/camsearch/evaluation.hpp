// Checkable task intent attached to a mission: placement, scale, angle and
// hard-failure conditions.
#pragma once

#include "camsearch/json_util.hpp"

#include <optional>
#include <string>
#include <vector>

namespace camsearch {

enum class HorizontalSide { none, left, right };
enum class VerticalSide { none, top, bottom };

/// Half-screen and rule-of-thirds placement. Serialized as underscore-joined
/// tokens, e.g. "left", "thirds_left", "thirds_top_right", "center".
struct PlacementPref {
  HorizontalSide horizontal = HorizontalSide::none;
  VerticalSide vertical = VerticalSide::none;
  bool thirds = false;

  static std::optional<PlacementPref> parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const PlacementPref&) const = default;
};

enum class ScalePref { small, medium, large };
enum class AnglePref { low, eye, high, top };

std::optional<ScalePref> parse_scale_pref(std::string_view s);
std::optional<AnglePref> parse_angle_pref(std::string_view s);
std::string to_string(ScalePref s);
std::string to_string(AnglePref a);

/// Coverage band [lo, hi) for a subject scale preference.
struct CoverageBand {
  double lo;
  double hi;
  bool contains(double coverage) const { return coverage >= lo && coverage < hi; }
  double peak() const { return 0.5 * (lo + hi); }
};

struct ScaleBands {
  CoverageBand small{0.005, 0.05};
  CoverageBand medium{0.05, 0.20};
  // upper edge is inclusive for the largest band
  CoverageBand large{0.20, 0.60 + 1e-12};

  const CoverageBand& band(ScalePref s) const;
};

/// Elevation window (degrees, camera above target is positive) for an angle
/// preference, plus the looser window beyond which the view type is grossly
/// violated.
struct AngleWindow {
  double lo;
  double hi;
};
AngleWindow preferred_elevation(AnglePref a);
AngleWindow tolerated_elevation(AnglePref a);

inline const std::vector<std::string> kHardFailureTags{"invalid_camera", "subject_missing",
                                                       "extreme_occlusion", "view_type_violation"};

struct EvaluationSpec {
  std::optional<std::string> primary_subject;
  std::optional<PlacementPref> placement_pref;
  std::optional<ScalePref> scale_pref;
  std::optional<AnglePref> angle_pref;
  std::optional<bool> symmetry;
  std::optional<bool> depth_emphasis;
  /// Enabled hard-failure checks; empty enables all of them.
  std::vector<std::string> hard_fail_conditions;

  bool hard_fail_enabled(std::string_view tag) const;
};

/// Throws ParseError on malformed fields; `owner` names the mission.
EvaluationSpec evaluation_spec_from_json(const json& j, const std::string& owner);
json to_json(const EvaluationSpec& spec);

}  // namespace camsearch
