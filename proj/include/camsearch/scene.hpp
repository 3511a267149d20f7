#pragma once

#include "camsearch/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace camsearch {

/// Raised for malformed scene or mission documents. The message carries the
/// line (for syntax errors) or the object id and field (for schema errors).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SceneObject {
  std::string id;
  std::string label;
  Box3d box;
  std::set<std::string> tags;

  Vec3 center() const { return box.center(); }
};

/// Immutable box-decomposed scene. Up axis is +Z.
class SceneModel {
 public:
  static constexpr int kFormatVersion = 1;

  SceneModel() = default;
  /// Throws ValidationError on an empty list, duplicate ids or inverted boxes.
  explicit SceneModel(std::vector<SceneObject> objects);

  const std::vector<SceneObject>& objects() const { return objects_; }
  const Box3d& bounds() const { return bounds_; }
  /// Largest edge of the union box.
  double scale() const { return scale_; }
  double height() const { return bounds_.sizes().z(); }
  bool empty() const { return objects_.empty(); }

  const SceneObject* find(std::string_view id) const;
  const SceneObject& at(std::string_view id) const;
  /// True when p lies strictly inside any object box.
  bool inside_any(const Vec3& p) const;

 private:
  std::vector<SceneObject> objects_;
  Box3d bounds_;
  double scale_ = 0.0;
};

SceneModel parse_scene(std::string_view text);
SceneModel load_scene(const std::filesystem::path& path);
nlohmann::json scene_to_json(const SceneModel& scene);
void save_scene(const SceneModel& scene, const std::filesystem::path& path);

struct ObjectSummary {
  std::string id;
  std::string label;
  Vec3 center;
  Vec3 extent;
  double volume;
};

/// Per-object centers, extents and volumes, ordered by id.
std::vector<ObjectSummary> geometric_summary(const SceneModel& scene);
nlohmann::json summary_to_json(const std::vector<ObjectSummary>& summary);

enum class VerticalStructure { flat, layered, tower };
std::string to_string(VerticalStructure v);

struct TopologySummary {
  std::vector<std::string> dominant_objects;
  std::vector<std::string> foreground_ids;
  std::vector<std::string> background_ids;
  VerticalStructure vertical_structure = VerticalStructure::flat;
  std::vector<Vec3> open_regions;
};

struct TopologyConfig {
  int grid_x = 8;
  int grid_y = 8;
  int grid_z = 4;
  double tower_aspect = 3.0;
  double tower_scene_fraction = 0.5;
  double layered_span_fraction = 0.5;
  int layered_min_bands = 3;
  int layered_band_count = 4;
};

TopologySummary topology_summary(const SceneModel& scene, const TopologyConfig& config = {});
nlohmann::json topology_to_json(const TopologySummary& topo);

}  // namespace camsearch
