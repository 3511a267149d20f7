#include "camsearch/anchor_bank.hpp"

#include "camsearch/camera.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace camsearch {

std::string to_string(AnchorSource s) {
  switch (s) {
    case AnchorSource::bbox_heuristic: return "bbox_heuristic";
    case AnchorSource::look_toward: return "look_toward";
    case AnchorSource::visibility: return "visibility";
    case AnchorSource::scout_relocation: return "scout_relocation";
  }
  return "bbox_heuristic";
}

json to_json(const Anchor& a) {
  return {{"position", to_json(a.position)},
          {"look_at", to_json(a.look_at)},
          {"focal_hint", a.focal_hint},
          {"aspect_hint", a.aspect_hint ? json(*a.aspect_hint) : json(nullptr)},
          {"prior", a.prior},
          {"source", to_string(a.source)},
          {"region_key", a.region_key.to_string()},
          {"visibility", a.visibility}};
}

double anchor_prior(AnchorSource source, double visibility) {
  double base = 0.4;
  switch (source) {
    case AnchorSource::bbox_heuristic: base = 0.4; break;
    case AnchorSource::look_toward: base = 0.6; break;
    case AnchorSource::visibility: base = 0.7; break;
    case AnchorSource::scout_relocation: base = 0.5; break;
  }
  return 0.5 * base + 0.5 * std::clamp(visibility, 0.0, 1.0);
}

double framing_focal(double radius, double distance) {
  if (!(distance > radius) || radius <= 0.0) return kMinFocalMm;
  const double half_angle = std::asin(radius / distance);
  return std::clamp(0.5 * kSensorWidthMm / std::tan(half_angle), kMinFocalMm, kMaxFocalMm);
}

namespace {

double subject_radius(const SceneObject& o) { return std::max(0.5 * o.box.sizes().norm(), 1e-3); }

Vec3 nearest_free_cell_center(const Vec3& p, const SceneModel& scene, double h) {
  const RegionKey origin = region_key(p, h);
  for (int ring = 0; ring <= 8; ++ring) {
    std::optional<Vec3> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int di = -ring; di <= ring; ++di)
      for (int dj = -ring; dj <= ring; ++dj)
        for (int dk = -ring; dk <= ring; ++dk) {
          if (std::max({std::abs(di), std::abs(dj), std::abs(dk)}) != ring) continue;
          const Vec3 c = cell_bounds({origin.i + di, origin.j + dj, origin.k + dk}, h).center();
          if (scene.inside_any(c)) continue;
          const double d = (c - p).norm();
          if (d < best_d) {
            best_d = d;
            best = c;
          }
        }
    if (best) return *best;
  }
  return p + Vec3(0, 0, scene.height() + h);
}

}  // namespace

std::vector<Anchor> build_anchor_bank(const SceneModel& scene, const Blueprint& blueprint,
                                      const TopologySummary& topo, const std::vector<Anchor>& scout_anchors,
                                      const AnchorBankConfig& cfg) {
  if (scene.empty()) throw ValidationError("anchor bank needs a non-empty scene");
  const double h = cell_size(scene.scale());
  const Box3d& bounds = scene.bounds();
  const Vec3 center = bounds.center();
  const Vec3 size = bounds.sizes();
  const double footprint_radius = std::max({0.5 * size.head<2>().norm(), 0.25 * size.z(), 0.5});
  const double scene_radius = std::max(0.5 * size.norm(), 0.5);
  const double ring = cfg.ring_radius_factor * footprint_radius;
  const SceneObject* subject = blueprint.primary_subject ? scene.find(*blueprint.primary_subject) : nullptr;

  auto visibility_from = [&](const Vec3& eye, int samples = 8) {
    if (!subject) return 1.0;
    if (scene.inside_any(eye)) return 0.0;
    return 1.0 - occlusion_fraction(eye, *subject, scene, samples);
  };

  std::vector<Anchor> raw;
  auto add = [&](Vec3 position, const Vec3& look_at, double focal, AnchorSource source,
                 std::optional<double> aspect_hint = std::nullopt) {
    if (scene.inside_any(position)) position = nearest_free_cell_center(position, scene, h);
    if ((look_at - position).norm() < 1e-6) return;
    Anchor a;
    a.position = position;
    a.look_at = look_at;
    a.focal_hint = focal;
    a.aspect_hint = aspect_hint;
    a.source = source;
    a.visibility = visibility_from(position);
    a.prior = anchor_prior(source, a.visibility);
    raw.push_back(a);
  };

  const double eye_z = bounds.min().z() + cfg.eye_height_fraction * size.z();
  for (int k = 0; k < 8; ++k) {
    const double theta = k * std::numbers::pi / 4.0;
    const Vec3 p(center.x() + ring * std::cos(theta), center.y() + ring * std::sin(theta), eye_z);
    const Vec3 target(center.x(), center.y(), eye_z + 0.5 * (center.z() - eye_z));
    add(p, target, framing_focal(scene_radius, (target - p).norm()), AnchorSource::bbox_heuristic);
  }
  const double elev = cfg.elevated_angle_deg * std::numbers::pi / 180.0;
  for (int k = 0; k < 4; ++k) {
    const double theta = std::numbers::pi / 4.0 + k * std::numbers::pi / 2.0;
    const Vec3 p(center.x() + ring * std::cos(theta), center.y() + ring * std::sin(theta),
                 center.z() + ring * std::tan(elev));
    add(p, center, framing_focal(scene_radius, (center - p).norm()), AnchorSource::bbox_heuristic);
  }
  {
    const Vec3 p(center.x(), center.y(), bounds.max().z() + ring);
    add(p, center, framing_focal(scene_radius, (center - p).norm()), AnchorSource::bbox_heuristic, 1.0);
  }

  const double frame_radius = subject ? 3.0 * subject_radius(*subject) : scene_radius;
  {
    std::vector<Vec3> candidates;
    for (const auto& c : topo.open_regions)
      if ((c - blueprint.look_toward).norm() > 1.5 * (subject ? subject_radius(*subject) : 0.5)) candidates.push_back(c);
    std::stable_sort(candidates.begin(), candidates.end(), [&](const Vec3& a, const Vec3& b) {
      return (a - blueprint.look_toward).norm() > (b - blueprint.look_toward).norm();
    });
    std::vector<Vec3> picked;
    for (const auto& c : candidates) {
      if (static_cast<int>(picked.size()) >= cfg.max_look_toward) break;
      if (std::any_of(picked.begin(), picked.end(), [&](const Vec3& q) { return (q - c).norm() < h; })) continue;
      picked.push_back(c);
    }
    for (const auto& p : picked)
      add(p, blueprint.look_toward, framing_focal(frame_radius, (blueprint.look_toward - p).norm()),
          AnchorSource::look_toward);
  }

  if (subject) {
    const double rs = subject_radius(*subject);
    const Vec3 target = subject->center();
    const Box3d grid(Vec3(bounds.min().x() - 0.5 * footprint_radius, bounds.min().y() - 0.5 * footprint_radius, eye_z),
                     Vec3(bounds.max().x() + 0.5 * footprint_radius, bounds.max().y() + 0.5 * footprint_radius,
                          bounds.max().z() + 0.5 * footprint_radius));
    struct Scored {
      double score;
      int index;
      Vec3 p;
      double vis;
    };
    std::vector<Scored> scored;
    const int nxy = cfg.visibility_grid_xy;
    const int nz = cfg.visibility_grid_z;
    int index = 0;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < nxy; ++j)
        for (int i = 0; i < nxy; ++i, ++index) {
          const Vec3 t((i + 0.5) / nxy, (j + 0.5) / nxy, nz == 1 ? 0.5 : double(k) / (nz - 1));
          const Vec3 p = grid.min() + grid.sizes().cwiseProduct(t);
          const double dist = (p - target).norm();
          if (scene.inside_any(p) || dist < 1.5 * rs) continue;
          const double vis = visibility_from(p, 4);
          scored.push_back({vis * std::min(1.0, 4.0 * rs / dist), index, p, vis});
        }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.index < b.index;
    });
    std::vector<Vec3> picked;
    for (const auto& s : scored) {
      if (static_cast<int>(picked.size()) >= cfg.max_visibility || s.score <= 0.0) break;
      if (std::any_of(picked.begin(), picked.end(), [&](const Vec3& q) { return (q - s.p).norm() < h; })) continue;
      picked.push_back(s.p);
    }
    for (const auto& p : picked) {
      const auto sb_size = subject->box.sizes();
      add(p, target, framing_focal(2.5 * rs, (target - p).norm()), AnchorSource::visibility,
          std::max(sb_size.x(), sb_size.y()) / std::max(sb_size.z(), 1e-6) >= 1.0 ? 16.0 / 9.0 : 2.0 / 3.0);
    }
  }

  for (const auto& scout : scout_anchors) {
    if (!scout.position.allFinite() || !scout.look_at.allFinite()) continue;
    add(scout.position, scout.look_at, std::clamp(scout.focal_hint, kMinFocalMm, kMaxFocalMm),
        AnchorSource::scout_relocation, scout.aspect_hint);
  }

  std::vector<Anchor> bank;
  std::set<RegionKey> seen;
  for (auto& a : raw) {
    a.region_key = region_key(a.position, h);
    if (seen.insert(a.region_key).second) bank.push_back(a);
  }
  return bank;
}

}  // namespace camsearch
