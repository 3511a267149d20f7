// Executable camera state, perspective projection onto normalized screen
// space, and the projection-side reviewer signals.
#pragma once

#include "camsearch/evaluation.hpp"
#include "camsearch/geometry.hpp"
#include "camsearch/json_util.hpp"
#include "camsearch/scene.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace camsearch {

inline constexpr double kSensorWidthMm = 36.0;
inline constexpr double kMinFocalMm = 8.0;
inline constexpr double kMaxFocalMm = 400.0;
inline constexpr double kMinFNumber = 0.95;
inline constexpr double kMaxFNumber = 22.0;
/// Points at or behind this camera-space depth do not project.
inline constexpr double kNearDepth = 1e-6;

class InvalidCamera : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Aspect ratio as an integer pair, written "16:9".
struct AspectRatio {
  int width = 16;
  int height = 9;

  double value() const { return static_cast<double>(width) / height; }
  std::string to_string() const { return std::to_string(width) + ":" + std::to_string(height); }
  static std::optional<AspectRatio> parse(std::string_view text);
  bool operator==(const AspectRatio& o) const { return width * o.height == o.width * height; }
};

/// (position, look-at, focal length, aperture, aspect ratio).
struct CameraState {
  Vec3 position = Vec3::Zero();
  Vec3 look_at = Vec3::UnitY();
  double focal_mm = 35.0;
  double f_number = 4.0;
  AspectRatio aspect;
};

/// Non-throwing invariant check: finite, position != look-at, lens ranges.
bool is_valid(const CameraState& cam);
/// Throws InvalidCamera when position and look-at coincide.
CameraFrame<double> camera_frame(const CameraState& cam);

json to_json(const CameraState& cam);
/// nullopt on any missing or malformed field. Does not clamp.
std::optional<CameraState> camera_from_json(const json& j);

struct ScreenPoint {
  double u;
  double v;
  double depth;
};

/// Throws InvalidCamera for degenerate cameras.
std::optional<ScreenPoint> project_point(const CameraState& cam, const Vec3& world);

struct ScreenBox {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;
  Vec2 center = Vec2::Constant(0.5);
  /// Clipped-rectangle area as a fraction of the frame.
  double coverage = 0.0;
  /// Area of the unclipped projected rectangle (may exceed 1).
  double raw_area = 0.0;
  bool fully_inside = false;
  bool visible = false;
};

/// Projects a box with near-plane clipping of its edges, then clips the
/// bounding rectangle to the frame. Throws InvalidCamera for degenerate cameras.
ScreenBox project_box(const CameraState& cam, const Box3d& box);

/// Target composition point for m2 given the projected subject center.
Vec2 composition_target(const std::optional<PlacementPref>& pref, const Vec2& projected_center);

int rule_m1(const CameraState& cam, const SceneObject& subject, const std::optional<PlacementPref>& pref);
double rule_m2(const CameraState& cam, const SceneObject& subject, const std::optional<PlacementPref>& pref);

enum class HardFailure { invalid_camera, subject_missing, extreme_occlusion, view_type_violation };
std::string to_string(HardFailure f);
std::optional<HardFailure> parse_hard_failure(std::string_view s);

struct OcclusionConfig {
  int samples_per_face_side = 8;
  double extreme_fraction = 0.9;
  double missing_coverage = 0.0005;
};

/// Fraction of the subject's camera-facing surface hidden from `eye` by other
/// objects: an 8x8 stratified grid per facing face, faces weighted by their
/// projected area toward the eye.
double occlusion_fraction(const Vec3& eye, const SceneObject& subject, const SceneModel& scene,
                          int samples_per_side = 8);

/// Degrees; positive when the camera is above the target.
double elevation_deg(const Vec3& position, const Vec3& target);

std::optional<HardFailure> hard_failure_check(const CameraState& cam, const SceneModel& scene,
                                              const EvaluationSpec& spec, const OcclusionConfig& cfg = {});

struct RuleSignals {
  int m1 = 0;
  double m2 = 0.0;
  bool subject_visible = false;
  std::optional<HardFailure> hard_failure;
  double coverage = 0.0;
};

/// m1, m2, visibility and hard failure for the mission's primary subject.
RuleSignals rule_signals(const CameraState& cam, const SceneModel& scene, const EvaluationSpec& spec,
                         const std::optional<std::string>& subject_id, const OcclusionConfig& cfg = {});

json to_json(const RuleSignals& s);

}  // namespace camsearch
