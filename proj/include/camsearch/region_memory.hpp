// Spatial memory over camera positions: cubic cells with visit and outcome
// statistics, unknown/promising/dead labels, and the forbidden zones they imply.
#pragma once

#include "camsearch/geometry.hpp"
#include "camsearch/json_util.hpp"

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace camsearch {

struct RegionKey {
  int i = 0;
  int j = 0;
  int k = 0;

  auto operator<=>(const RegionKey&) const = default;
  std::string to_string() const;
};

/// max(0.12 * scene_scale, 0.9). Throws std::invalid_argument for scale <= 0.
double cell_size(double scene_scale);
RegionKey region_key(const Vec3& position, double h);
Box3d cell_bounds(const RegionKey& key, double h);

enum class RegionLabel { unknown, promising, dead };
std::string to_string(RegionLabel l);

struct RegionRecord {
  int visits = 0;
  double best_score = 0.0;
  double best_semantic = 0.0;
  int poor_hits = 0;
  int promising_hits = 0;
  int improvement_hits = 0;
  int stagnation_hits = 0;
  RegionLabel label = RegionLabel::unknown;
};

struct RegionThresholds {
  double poor_score = 0.40;
  double promising_score = 0.68;
  double promising_semantic = 0.70;
  double improvement_delta = 0.02;
  int dead_poor_hits = 2;
  double dead_best_guard = 0.45;
  int dead_stagnation_hits = 3;
};

/// Label implied by a record's counters. Dead is absorbing.
RegionLabel relabel(const RegionRecord& record, const RegionThresholds& t = {});

class RegionMemory {
 public:
  explicit RegionMemory(double h, bool enabled = true, RegionThresholds thresholds = {});

  /// Throws std::invalid_argument when score or semantic lie outside [0, 1].
  void record_candidate(const Vec3& position, double score, double semantic, double round_delta, bool hard_failed);

  double cell_size() const { return h_; }
  bool enabled() const { return enabled_; }
  RegionKey key(const Vec3& position) const { return region_key(position, h_); }
  /// Zero record when the cell was never visited or memory is disabled.
  const RegionRecord& record(const RegionKey& key) const;
  RegionLabel label(const Vec3& position) const { return record(key(position)).label; }
  const std::map<RegionKey, RegionRecord>& records() const { return records_; }
  const RegionThresholds& thresholds() const { return thresholds_; }

  json to_json() const;

 private:
  double h_;
  bool enabled_;
  RegionThresholds thresholds_;
  std::map<RegionKey, RegionRecord> records_;
};

enum class ZoneOrigin { reflector_dead, reviewer };
std::string to_string(ZoneOrigin o);

struct ForbiddenZone {
  Vec3 center = Vec3::Zero();
  Vec3 half_extent = Vec3::Ones();
  ZoneOrigin origin = ZoneOrigin::reviewer;

  Box3d box() const { return Box3d(center - half_extent, center + half_extent); }
  /// Closed-box containment.
  bool contains(const Vec3& p) const { return ((p - center).cwiseAbs().array() <= half_extent.array()).all(); }
};

json to_json(const ForbiddenZone& z);
bool inside_any(const std::vector<ForbiddenZone>& zones, const Vec3& p);

/// Dead-cell zones followed by reviewer zones; a zone overlapping an earlier
/// one by >= 90% of the smaller volume is dropped.
std::vector<ForbiddenZone> forbidden_zones(const RegionMemory& memory, const std::vector<ForbiddenZone>& reviewer_zones);

/// Log-derived search statistics. These definitions are artifact-defined:
/// coverage = distinct keys / candidates, revisit = 1 - coverage, collapse =
/// fraction of rounds whose candidates all share one key.
struct SearchDiagnostics {
  double coverage = 0.0;
  double collapse = 0.0;
  double revisit = 0.0;
  int candidates = 0;
  int distinct_regions = 0;
};

/// Throws std::invalid_argument when no round contains a candidate.
SearchDiagnostics search_diagnostics(const std::vector<std::vector<RegionKey>>& keys_by_round);
json to_json(const SearchDiagnostics& d);

}  // namespace camsearch
