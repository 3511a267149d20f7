#include "camsearch/camera.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace camsearch {

std::optional<AspectRatio> AspectRatio::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  try {
    const int w = std::stoi(std::string(text.substr(0, colon)));
    const int h = std::stoi(std::string(text.substr(colon + 1)));
    if (w <= 0 || h <= 0) return std::nullopt;
    return AspectRatio{w, h};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool is_valid(const CameraState& cam) {
  if (!cam.position.allFinite() || !cam.look_at.allFinite()) return false;
  if (!((cam.look_at - cam.position).norm() > 1e-9)) return false;
  if (!(cam.focal_mm >= kMinFocalMm && cam.focal_mm <= kMaxFocalMm)) return false;
  if (!(cam.f_number >= kMinFNumber && cam.f_number <= kMaxFNumber)) return false;
  return cam.aspect.width > 0 && cam.aspect.height > 0;
}

CameraFrame<double> camera_frame(const CameraState& cam) {
  try {
    return make_frame(cam.position, cam.look_at, cam.focal_mm, cam.aspect.value(), kSensorWidthMm);
  } catch (const std::invalid_argument& e) {
    throw InvalidCamera(e.what());
  }
}

json to_json(const CameraState& cam) {
  return {{"position", to_json(cam.position)},
          {"look_at", to_json(cam.look_at)},
          {"focal_mm", cam.focal_mm},
          {"f_number", cam.f_number},
          {"aspect", cam.aspect.to_string()}};
}

std::optional<CameraState> camera_from_json(const json& j) {
  if (!j.is_object()) return std::nullopt;
  CameraState cam;
  auto p = j.contains("position") ? vec3_from_json(j.at("position")) : std::nullopt;
  auto l = j.contains("look_at") ? vec3_from_json(j.at("look_at")) : std::nullopt;
  auto f = number_field(j, "focal_mm");
  auto d = number_field(j, "f_number");
  auto r = string_field(j, "aspect");
  if (!p || !l || !f || !d || !r) return std::nullopt;
  auto ratio = AspectRatio::parse(*r);
  if (!ratio) return std::nullopt;
  cam.position = *p;
  cam.look_at = *l;
  cam.focal_mm = *f;
  cam.f_number = *d;
  cam.aspect = *ratio;
  return cam;
}

std::optional<ScreenPoint> project_point(const CameraState& cam, const Vec3& world) {
  const auto frame = camera_frame(cam);
  const Vec3 c = frame.to_camera(world);
  if (c.z() <= kNearDepth) return std::nullopt;
  const Vec2 uv = frame.to_screen(c);
  return ScreenPoint{uv.x(), uv.y(), c.z()};
}

ScreenBox project_box(const CameraState& cam, const Box3d& box) {
  const auto frame = camera_frame(cam);
  const auto corners = box_corners(box);
  std::array<Vec3, 8> cam_pts;
  bool all_front = true;
  for (int i = 0; i < 8; ++i) {
    cam_pts[i] = frame.to_camera(corners[i]);
    all_front = all_front && cam_pts[i].z() > kNearDepth;
  }

  std::vector<Vec3> kept;
  for (const auto& p : cam_pts)
    if (p.z() > kNearDepth) kept.push_back(p);
  for (const auto& edge : kBoxEdges) {
    const Vec3& a = cam_pts[edge[0]];
    const Vec3& b = cam_pts[edge[1]];
    if ((a.z() > kNearDepth) != (b.z() > kNearDepth)) {
      const double t = (kNearDepth - a.z()) / (b.z() - a.z());
      Vec3 hit = a + t * (b - a);
      hit.z() = kNearDepth * (1.0 + 1e-9);
      kept.push_back(hit);
    }
  }

  ScreenBox out;
  if (kept.empty()) return out;
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
  double u1 = -u0, v1 = -u0;
  for (const auto& p : kept) {
    const Vec2 uv = frame.to_screen(p);
    u0 = std::min(u0, uv.x());
    u1 = std::max(u1, uv.x());
    v0 = std::min(v0, uv.y());
    v1 = std::max(v1, uv.y());
  }
  out.raw_area = (u1 - u0) * (v1 - v0);
  out.u_min = std::clamp(u0, 0.0, 1.0);
  out.u_max = std::clamp(u1, 0.0, 1.0);
  out.v_min = std::clamp(v0, 0.0, 1.0);
  out.v_max = std::clamp(v1, 0.0, 1.0);
  out.coverage = std::max(0.0, out.u_max - out.u_min) * std::max(0.0, out.v_max - out.v_min);
  out.visible = out.coverage > 0.0;
  out.fully_inside = all_front && u0 >= 0.0 && v0 >= 0.0 && u1 <= 1.0 && v1 <= 1.0;
  out.center = all_front ? Vec2(0.5 * (u0 + u1), 0.5 * (v0 + v1))
                         : Vec2(0.5 * (out.u_min + out.u_max), 0.5 * (out.v_min + out.v_max));
  return out;
}

namespace {

double third_line(HorizontalSide side, double projected) {
  if (side == HorizontalSide::left) return 1.0 / 3.0;
  if (side == HorizontalSide::right) return 2.0 / 3.0;
  return projected > 0.5 ? 2.0 / 3.0 : 1.0 / 3.0;
}

double third_line(VerticalSide side, double projected) {
  if (side == VerticalSide::top) return 1.0 / 3.0;
  if (side == VerticalSide::bottom) return 2.0 / 3.0;
  return projected > 0.5 ? 2.0 / 3.0 : 1.0 / 3.0;
}

bool in_frame(const ScreenPoint& p) { return p.u >= 0.0 && p.u <= 1.0 && p.v >= 0.0 && p.v <= 1.0; }

std::optional<ScreenPoint> safe_project(const CameraState& cam, const Vec3& p) {
  try {
    return project_point(cam, p);
  } catch (const InvalidCamera&) {
    return std::nullopt;
  }
}

}  // namespace

Vec2 composition_target(const std::optional<PlacementPref>& pref, const Vec2& projected_center) {
  if (!pref || !pref->thirds) return Vec2(0.5, 0.5);
  return {third_line(pref->horizontal, projected_center.x()), third_line(pref->vertical, projected_center.y())};
}

int rule_m1(const CameraState& cam, const SceneObject& subject, const std::optional<PlacementPref>& pref) {
  if (!is_valid(cam)) return 0;
  const auto p = safe_project(cam, subject.center());
  if (!p || !in_frame(*p)) return 0;
  if (!pref) return 1;
  // exact 0.5 violates either side
  if (pref->horizontal == HorizontalSide::left && !(p->u < 0.5)) return 0;
  if (pref->horizontal == HorizontalSide::right && !(p->u > 0.5)) return 0;
  if (pref->vertical == VerticalSide::top && !(p->v < 0.5)) return 0;
  if (pref->vertical == VerticalSide::bottom && !(p->v > 0.5)) return 0;
  return 1;
}

double rule_m2(const CameraState& cam, const SceneObject& subject, const std::optional<PlacementPref>& pref) {
  if (!is_valid(cam)) return 0.0;
  const auto p = safe_project(cam, subject.center());
  if (!p || !in_frame(*p)) return 0.0;
  const Vec2 uv(p->u, p->v);
  const double d = (uv - composition_target(pref, uv)).norm();
  return std::max(0.0, 1.0 - d / 0.45);
}

std::string to_string(HardFailure f) {
  switch (f) {
    case HardFailure::invalid_camera: return "invalid_camera";
    case HardFailure::subject_missing: return "subject_missing";
    case HardFailure::extreme_occlusion: return "extreme_occlusion";
    case HardFailure::view_type_violation: return "view_type_violation";
  }
  return "invalid_camera";
}

std::optional<HardFailure> parse_hard_failure(std::string_view s) {
  for (auto f : {HardFailure::invalid_camera, HardFailure::subject_missing, HardFailure::extreme_occlusion,
                 HardFailure::view_type_violation})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

double occlusion_fraction(const Vec3& eye, const SceneObject& subject, const SceneModel& scene,
                          int samples_per_side) {
  const Box3d& box = subject.box;
  const double nudge = 1e-9 * std::max(1.0, scene.scale());
  double weight_sum = 0.0;
  double blocked_sum = 0.0;
  for (const auto& face : kBoxFaces) {
    const int axis = face.axis;
    const double plane = face.sign > 0 ? box.max()[axis] : box.min()[axis];
    const bool facing = face.sign > 0 ? eye[axis] > plane : eye[axis] < plane;
    if (!facing) continue;
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    const double extent_a = box.sizes()[a];
    const double extent_b = box.sizes()[b];
    Vec3 face_center = box.center();
    face_center[axis] = plane;
    const Vec3 to_eye = eye - face_center;
    const double weight = std::max(extent_a * extent_b, 1e-12) * std::abs(to_eye[axis]) / to_eye.norm();

    int blocked = 0;
    for (int ia = 0; ia < samples_per_side; ++ia) {
      for (int ib = 0; ib < samples_per_side; ++ib) {
        Vec3 sample;
        sample[axis] = plane + face.sign * nudge;
        sample[a] = box.min()[a] + (ia + 0.5) / samples_per_side * extent_a;
        sample[b] = box.min()[b] + (ib + 0.5) / samples_per_side * extent_b;
        for (const auto& other : scene.objects()) {
          if (other.id == subject.id) continue;
          if (segment_box_hit(sample, eye, other.box)) {
            ++blocked;
            break;
          }
        }
      }
    }
    weight_sum += weight;
    blocked_sum += weight * blocked / double(samples_per_side * samples_per_side);
  }
  if (weight_sum <= 0.0) return 1.0;
  return blocked_sum / weight_sum;
}

double elevation_deg(const Vec3& position, const Vec3& target) {
  const Vec3 d = position - target;
  return std::atan2(d.z(), d.head<2>().norm()) * 180.0 / std::numbers::pi;
}

namespace {

std::optional<HardFailure> check_hard_failure(const CameraState& cam, const SceneModel& scene,
                                              const EvaluationSpec& spec, const std::optional<std::string>& subject_id,
                                              const OcclusionConfig& cfg, double* coverage_out) {
  if (!is_valid(cam) || scene.inside_any(cam.position)) return HardFailure::invalid_camera;
  const SceneObject* subject = subject_id ? scene.find(*subject_id) : nullptr;
  if (subject_id && !subject && spec.hard_fail_enabled("subject_missing")) return HardFailure::subject_missing;
  if (subject) {
    const ScreenBox sb = project_box(cam, subject->box);
    if (coverage_out) *coverage_out = sb.coverage;
    if (spec.hard_fail_enabled("subject_missing") && sb.coverage < cfg.missing_coverage)
      return HardFailure::subject_missing;
    if (spec.hard_fail_enabled("extreme_occlusion") &&
        occlusion_fraction(cam.position, *subject, scene, cfg.samples_per_face_side) >= cfg.extreme_fraction)
      return HardFailure::extreme_occlusion;
  }
  if (spec.angle_pref && spec.hard_fail_enabled("view_type_violation")) {
    const Vec3 target = subject ? subject->center() : cam.look_at;
    const double elev = elevation_deg(cam.position, target);
    const AngleWindow window = tolerated_elevation(*spec.angle_pref);
    if (elev < window.lo || elev > window.hi) return HardFailure::view_type_violation;
  }
  return std::nullopt;
}

}  // namespace

std::optional<HardFailure> hard_failure_check(const CameraState& cam, const SceneModel& scene,
                                              const EvaluationSpec& spec, const OcclusionConfig& cfg) {
  return check_hard_failure(cam, scene, spec, spec.primary_subject, cfg, nullptr);
}

RuleSignals rule_signals(const CameraState& cam, const SceneModel& scene, const EvaluationSpec& spec,
                         const std::optional<std::string>& subject_id, const OcclusionConfig& cfg) {
  RuleSignals out;
  out.hard_failure = check_hard_failure(cam, scene, spec, subject_id, cfg, &out.coverage);
  if (out.hard_failure == HardFailure::invalid_camera) return out;
  const SceneObject* subject = subject_id ? scene.find(*subject_id) : nullptr;
  if (!subject) {
    // No subject to place: only the frame-validity part of the signals applies.
    out.m1 = 1;
    out.m2 = 1.0;
    out.subject_visible = true;
    return out;
  }
  out.subject_visible = out.coverage >= cfg.missing_coverage;
  out.m1 = out.subject_visible ? rule_m1(cam, *subject, spec.placement_pref) : 0;
  out.m2 = rule_m2(cam, *subject, spec.placement_pref);
  return out;
}

json to_json(const RuleSignals& s) {
  return {{"m1", s.m1},
          {"m2", s.m2},
          {"subject_visible", s.subject_visible},
          {"coverage", s.coverage},
          {"hard_failure", s.hard_failure ? json(to_string(*s.hard_failure)) : json(nullptr)}};
}

}  // namespace camsearch
