#include "camsearch/region_memory.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace camsearch {

std::string RegionKey::to_string() const {
  return std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k);
}

double cell_size(double scene_scale) {
  if (!(scene_scale > 0.0)) throw std::invalid_argument("scene scale must be positive");
  return std::max(0.12 * scene_scale, 0.9);
}

RegionKey region_key(const Vec3& position, double h) {
  return {static_cast<int>(std::floor(position.x() / h)), static_cast<int>(std::floor(position.y() / h)),
          static_cast<int>(std::floor(position.z() / h))};
}

Box3d cell_bounds(const RegionKey& key, double h) {
  const Vec3 lo = h * Vec3(key.i, key.j, key.k);
  return Box3d(lo, lo + Vec3::Constant(h));
}

std::string to_string(RegionLabel l) {
  switch (l) {
    case RegionLabel::unknown: return "unknown";
    case RegionLabel::promising: return "promising";
    case RegionLabel::dead: return "dead";
  }
  return "unknown";
}

RegionLabel relabel(const RegionRecord& r, const RegionThresholds& t) {
  if (r.label == RegionLabel::dead) return RegionLabel::dead;
  const bool poor_dead = r.poor_hits >= t.dead_poor_hits && r.best_score < t.dead_best_guard;
  const bool stagnant_dead = r.stagnation_hits >= t.dead_stagnation_hits && r.improvement_hits == 0;
  if (poor_dead || stagnant_dead) return RegionLabel::dead;
  if (r.promising_hits > 0 || r.best_score >= t.promising_score || r.best_semantic >= t.promising_semantic)
    return RegionLabel::promising;
  return RegionLabel::unknown;
}

RegionMemory::RegionMemory(double h, bool enabled, RegionThresholds thresholds)
    : h_(h), enabled_(enabled), thresholds_(thresholds) {
  if (!(h > 0.0)) throw std::invalid_argument("cell size must be positive");
}

void RegionMemory::record_candidate(const Vec3& position, double score, double semantic, double round_delta,
                                    bool hard_failed) {
  if (!(score >= 0.0 && score <= 1.0) || !(semantic >= 0.0 && semantic <= 1.0))
    throw std::invalid_argument("region scores must lie in [0, 1]");
  if (!enabled_) return;
  RegionRecord& r = records_[key(position)];
  const auto& t = thresholds_;
  r.visits += 1;
  r.best_score = std::max(r.best_score, score);
  r.best_semantic = std::max(r.best_semantic, semantic);
  const bool promising = score >= t.promising_score || semantic >= t.promising_semantic;
  if (score < t.poor_score || hard_failed) r.poor_hits += 1;
  if (promising) r.promising_hits += 1;
  if (round_delta > t.improvement_delta) r.improvement_hits += 1;
  if (std::abs(round_delta) <= t.improvement_delta && !promising) r.stagnation_hits += 1;
  r.label = relabel(r, t);
}

const RegionRecord& RegionMemory::record(const RegionKey& key) const {
  static const RegionRecord kEmpty{};
  if (!enabled_) return kEmpty;
  auto it = records_.find(key);
  return it == records_.end() ? kEmpty : it->second;
}

json RegionMemory::to_json() const {
  json cells = json::object();
  for (const auto& [k, r] : records_) {
    cells[k.to_string()] = {{"visits", r.visits},
                            {"best_score", r.best_score},
                            {"best_semantic", r.best_semantic},
                            {"poor_hits", r.poor_hits},
                            {"promising_hits", r.promising_hits},
                            {"improvement_hits", r.improvement_hits},
                            {"stagnation_hits", r.stagnation_hits},
                            {"label", camsearch::to_string(r.label)}};
  }
  return {{"cell_size", h_}, {"enabled", enabled_}, {"cells", std::move(cells)}};
}

std::string to_string(ZoneOrigin o) { return o == ZoneOrigin::reviewer ? "reviewer" : "reflector_dead"; }

json to_json(const ForbiddenZone& z) {
  return {{"center", to_json(z.center)}, {"half_extent", to_json(z.half_extent)}, {"origin", to_string(z.origin)}};
}

bool inside_any(const std::vector<ForbiddenZone>& zones, const Vec3& p) {
  return std::any_of(zones.begin(), zones.end(), [&](const ForbiddenZone& z) { return z.contains(p); });
}

namespace {

double overlap_ratio(const ForbiddenZone& a, const ForbiddenZone& b) {
  const Box3d inter = a.box().intersection(b.box());
  if (inter.isEmpty()) return 0.0;
  const double smaller = std::min(box_volume(a.box()), box_volume(b.box()));
  if (smaller <= 0.0) return 1.0;
  return box_volume(inter) / smaller;
}

}  // namespace

std::vector<ForbiddenZone> forbidden_zones(const RegionMemory& memory, const std::vector<ForbiddenZone>& reviewer_zones) {
  std::vector<ForbiddenZone> out;
  const double h = memory.cell_size();
  if (memory.enabled()) {
    for (const auto& [k, r] : memory.records()) {
      if (r.label != RegionLabel::dead) continue;
      const Box3d cell = cell_bounds(k, h);
      out.push_back({cell.center(), Vec3::Constant(0.5 * h), ZoneOrigin::reflector_dead});
    }
  }
  for (const auto& z : reviewer_zones) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& e) { return overlap_ratio(e, z) >= 0.9; });
    if (!dup) out.push_back(z);
  }
  return out;
}

SearchDiagnostics search_diagnostics(const std::vector<std::vector<RegionKey>>& keys_by_round) {
  SearchDiagnostics d;
  std::set<RegionKey> distinct;
  int rounds = 0;
  int collapsed = 0;
  for (const auto& round : keys_by_round) {
    if (round.empty()) continue;
    ++rounds;
    d.candidates += static_cast<int>(round.size());
    distinct.insert(round.begin(), round.end());
    if (std::all_of(round.begin(), round.end(), [&](const RegionKey& k) { return k == round.front(); })) ++collapsed;
  }
  if (d.candidates == 0) throw std::invalid_argument("search diagnostics need at least one candidate");
  d.distinct_regions = static_cast<int>(distinct.size());
  d.coverage = static_cast<double>(d.distinct_regions) / d.candidates;
  d.revisit = 1.0 - d.coverage;
  d.collapse = static_cast<double>(collapsed) / rounds;
  return d;
}

json to_json(const SearchDiagnostics& d) {
  return {{"coverage", d.coverage},
          {"collapse", d.collapse},
          {"revisit", d.revisit},
          {"candidates", d.candidates},
          {"distinct_regions", d.distinct_regions},
          {"definition", "artifact-defined"}};
}

}  // namespace camsearch
