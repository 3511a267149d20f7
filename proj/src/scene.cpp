#include "camsearch/scene.hpp"

#include "camsearch/json_util.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

namespace camsearch {

SceneModel::SceneModel(std::vector<SceneObject> objects) : objects_(std::move(objects)) {
  if (objects_.empty()) throw ValidationError("scene has no objects");
  std::set<std::string> seen;
  bounds_.setEmpty();
  for (const auto& obj : objects_) {
    if (obj.id.empty()) throw ValidationError("object with empty id");
    if (!seen.insert(obj.id).second) throw ValidationError("duplicate object id '" + obj.id + "'");
    if (!(obj.box.min().array() <= obj.box.max().array()).all())
      throw ValidationError("object '" + obj.id + "': aabb_min exceeds aabb_max");
    if (!obj.box.min().allFinite() || !obj.box.max().allFinite())
      throw ValidationError("object '" + obj.id + "': non-finite bounds");
    bounds_.extend(obj.box);
  }
  scale_ = bounds_.sizes().maxCoeff();
  if (!(scale_ > 0.0)) throw ValidationError("scene has zero extent");
}

const SceneObject* SceneModel::find(std::string_view id) const {
  for (const auto& obj : objects_)
    if (obj.id == id) return &obj;
  return nullptr;
}

const SceneObject& SceneModel::at(std::string_view id) const {
  if (const auto* obj = find(id)) return *obj;
  throw std::out_of_range("unknown object id '" + std::string(id) + "'");
}

bool SceneModel::inside_any(const Vec3& p) const {
  return std::any_of(objects_.begin(), objects_.end(),
                     [&](const SceneObject& o) { return interior_contains(o.box, p); });
}

namespace {

Vec3 require_vec3(const json& obj, const char* key, const std::string& owner) {
  if (!obj.contains(key)) throw ParseError("object '" + owner + "': missing field " + key);
  auto v = vec3_from_json(obj.at(key));
  if (!v) throw ParseError("object '" + owner + "': field " + key + " must be 3 finite numbers");
  return *v;
}

SceneObject parse_object(const json& j, std::size_t index) {
  if (!j.is_object()) throw ParseError("objects[" + std::to_string(index) + "] is not an object");
  SceneObject obj;
  if (!j.contains("id") || !j.at("id").is_string())
    throw ParseError("objects[" + std::to_string(index) + "]: missing field id");
  obj.id = j.at("id").get<std::string>();
  if (j.contains("label")) {
    if (!j.at("label").is_string()) throw ParseError("object '" + obj.id + "': label must be a string");
    obj.label = j.at("label").get<std::string>();
  }
  obj.box = Box3d(require_vec3(j, "aabb_min", obj.id), require_vec3(j, "aabb_max", obj.id));
  if (j.contains("tags")) {
    if (!j.at("tags").is_array()) throw ParseError("object '" + obj.id + "': tags must be a list");
    for (const auto& t : j.at("tags")) {
      if (!t.is_string()) throw ParseError("object '" + obj.id + "': tags must be strings");
      obj.tags.insert(t.get<std::string>());
    }
  }
  return obj;
}

}  // namespace

SceneModel parse_scene(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("scene: syntax error at line " + std::to_string(line_of_offset(text, e.byte)) +
                     ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("scene: top level must be an object");
  if (!doc.contains("format_version") || !doc.at("format_version").is_number_integer())
    throw ParseError("scene: missing field format_version");
  if (doc.at("format_version").get<int>() != SceneModel::kFormatVersion)
    throw ParseError("scene: unsupported format_version " + doc.at("format_version").dump());
  if (!doc.contains("objects") || !doc.at("objects").is_array())
    throw ParseError("scene: missing field objects");
  std::vector<SceneObject> objects;
  const auto& arr = doc.at("objects");
  for (std::size_t i = 0; i < arr.size(); ++i) objects.push_back(parse_object(arr[i], i));
  return SceneModel(std::move(objects));
}

SceneModel load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

json scene_to_json(const SceneModel& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects()) {
    objects.push_back({{"id", o.id},
                       {"label", o.label},
                       {"aabb_min", to_json(o.box.min())},
                       {"aabb_max", to_json(o.box.max())},
                       {"tags", o.tags}});
  }
  return {{"format_version", SceneModel::kFormatVersion}, {"objects", std::move(objects)}};
}

void save_scene(const SceneModel& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file " + path.string());
  out << scene_to_json(scene).dump(2) << '\n';
}

std::vector<ObjectSummary> geometric_summary(const SceneModel& scene) {
  std::vector<ObjectSummary> out;
  out.reserve(scene.objects().size());
  for (const auto& o : scene.objects())
    out.push_back({o.id, o.label, o.box.center(), o.box.sizes(), box_volume(o.box)});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

json summary_to_json(const std::vector<ObjectSummary>& summary) {
  json arr = json::array();
  for (const auto& s : summary)
    arr.push_back({{"id", s.id},
                   {"label", s.label},
                   {"center", to_json(s.center)},
                   {"extent", to_json(s.extent)},
                   {"volume", s.volume}});
  return arr;
}

std::string to_string(VerticalStructure v) {
  switch (v) {
    case VerticalStructure::flat: return "flat";
    case VerticalStructure::layered: return "layered";
    case VerticalStructure::tower: return "tower";
  }
  return "flat";
}

namespace {

VerticalStructure classify_vertical(const SceneModel& scene, const TopologyConfig& cfg) {
  const double scene_height = scene.height();
  if (scene_height <= 0.0) return VerticalStructure::flat;
  for (const auto& o : scene.objects()) {
    const Vec3 size = o.box.sizes();
    const double footprint = std::max(size.x(), size.y());
    if (size.z() > cfg.tower_aspect * footprint && size.z() > cfg.tower_scene_fraction * scene_height)
      return VerticalStructure::tower;
  }
  const double base = scene.bounds().min().z();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::set<int> bands;
  for (const auto& o : scene.objects()) {
    const double z = o.center().z();
    lo = std::min(lo, z);
    hi = std::max(hi, z);
    const int band = static_cast<int>((z - base) / scene_height * cfg.layered_band_count);
    bands.insert(std::clamp(band, 0, cfg.layered_band_count - 1));
  }
  if (hi - lo > cfg.layered_span_fraction * scene_height &&
      static_cast<int>(bands.size()) >= cfg.layered_min_bands)
    return VerticalStructure::layered;
  return VerticalStructure::flat;
}

std::vector<Vec3> find_open_regions(const SceneModel& scene, const TopologyConfig& cfg) {
  const Box3d& bounds = scene.bounds();
  const Eigen::Vector3i dims(cfg.grid_x, cfg.grid_y, cfg.grid_z);
  const Vec3 step = bounds.sizes().cwiseQuotient(dims.cast<double>());
  const int total = dims.prod();
  auto index = [&](int i, int j, int k) { return (k * dims.y() + j) * dims.x() + i; };
  auto cell_box = [&](int i, int j, int k) {
    const Vec3 lo = bounds.min() + step.cwiseProduct(Vec3(i, j, k));
    return Box3d(lo, lo + step);
  };

  std::vector<char> open(total, 0);
  for (int k = 0; k < dims.z(); ++k)
    for (int j = 0; j < dims.y(); ++j)
      for (int i = 0; i < dims.x(); ++i) {
        const Box3d cell = cell_box(i, j, k);
        open[index(i, j, k)] = std::none_of(scene.objects().begin(), scene.objects().end(),
                                            [&](const SceneObject& o) { return overlaps(cell, o.box); });
      }

  std::vector<int> component(total, -1);
  std::vector<int> best;
  for (int start = 0; start < total; ++start) {
    if (!open[start] || component[start] >= 0) continue;
    std::vector<int> members;
    std::deque<int> queue{start};
    component[start] = start;
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      members.push_back(cur);
      const int i = cur % dims.x();
      const int j = (cur / dims.x()) % dims.y();
      const int k = cur / (dims.x() * dims.y());
      const int nbr[6][3] = {{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k},
                             {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= dims.x() || n[1] >= dims.y() || n[2] >= dims.z())
          continue;
        const int idx = index(n[0], n[1], n[2]);
        if (open[idx] && component[idx] < 0) {
          component[idx] = start;
          queue.push_back(idx);
        }
      }
    }
    if (members.size() > best.size()) best = std::move(members);
  }
  std::sort(best.begin(), best.end());
  std::vector<Vec3> centers;
  for (int idx : best) {
    const int i = idx % dims.x();
    const int j = (idx / dims.x()) % dims.y();
    const int k = idx / (dims.x() * dims.y());
    centers.push_back(cell_box(i, j, k).center());
  }
  return centers;
}

}  // namespace

TopologySummary topology_summary(const SceneModel& scene, const TopologyConfig& config) {
  TopologySummary topo;
  std::vector<const SceneObject*> by_volume;
  for (const auto& o : scene.objects()) by_volume.push_back(&o);
  std::sort(by_volume.begin(), by_volume.end(), [](const SceneObject* a, const SceneObject* b) {
    const double va = box_volume(a->box);
    const double vb = box_volume(b->box);
    if (va != vb) return va > vb;
    return a->id < b->id;
  });
  for (const auto* o : by_volume) topo.dominant_objects.push_back(o->id);

  const Vec3 centroid = scene.bounds().center();
  std::vector<double> distances;
  for (const auto& o : scene.objects()) distances.push_back((o.center() - centroid).norm());
  std::vector<double> sorted = distances;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[(sorted.size() - 1) / 2];
  std::map<std::string, bool> is_foreground;
  for (std::size_t i = 0; i < distances.size(); ++i)
    is_foreground[scene.objects()[i].id] = distances[i] <= median + 1e-12;
  for (const auto& [id, fg] : is_foreground) (fg ? topo.foreground_ids : topo.background_ids).push_back(id);

  topo.vertical_structure = classify_vertical(scene, config);
  topo.open_regions = find_open_regions(scene, config);
  return topo;
}

json topology_to_json(const TopologySummary& topo) {
  json regions = json::array();
  for (const auto& c : topo.open_regions) regions.push_back(to_json(c));
  return {{"dominant_objects", topo.dominant_objects},
          {"foreground_ids", topo.foreground_ids},
          {"background_ids", topo.background_ids},
          {"vertical_structure", to_string(topo.vertical_structure)},
          {"open_regions", std::move(regions)}};
}

}  // namespace camsearch
