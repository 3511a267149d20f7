#include "camsearch/blueprint.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace camsearch {

std::string to_string(AdvisorRole role) {
  switch (role) {
    case AdvisorRole::blueprint: return "blueprint";
    case AdvisorRole::propose: return "propose";
    case AdvisorRole::review: return "review";
    case AdvisorRole::reflect: return "reflect";
    case AdvisorRole::compare: return "compare";
    case AdvisorRole::final_ratio: return "final_ratio";
  }
  return "blueprint";
}

std::string to_string(MissionCategory c) {
  switch (c) {
    case MissionCategory::subject_placement: return "subject_placement";
    case MissionCategory::relational_composition: return "relational_composition";
    case MissionCategory::atmosphere_style: return "atmosphere_style";
  }
  return "subject_placement";
}

std::optional<MissionCategory> parse_mission_category(std::string_view s) {
  for (auto c : {MissionCategory::subject_placement, MissionCategory::relational_composition,
                 MissionCategory::atmosphere_style})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

namespace {

std::string require_string(const json& j, const char* key, const std::string& owner) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw ParseError("mission '" + owner + "': missing field " + key);
  return j.at(key).get<std::string>();
}

MissionSpec parse_mission(const json& j, std::size_t index) {
  if (!j.is_object()) throw ParseError("missions[" + std::to_string(index) + "] is not an object");
  MissionSpec m;
  if (!j.contains("mission_id") || !j.at("mission_id").is_string())
    throw ParseError("missions[" + std::to_string(index) + "]: missing field mission_id");
  m.mission_id = j.at("mission_id").get<std::string>();
  const auto cat = require_string(j, "category", m.mission_id);
  auto parsed = parse_mission_category(cat);
  if (!parsed) throw ParseError("mission '" + m.mission_id + "': unknown category '" + cat + "'");
  m.category = *parsed;
  m.scene_ref = require_string(j, "scene_ref", m.mission_id);
  m.instruction = require_string(j, "instruction", m.mission_id);
  if (j.contains("bootstrap")) m.bootstrap = j.at("bootstrap");
  if (!j.contains("aspect_set") || !j.at("aspect_set").is_array())
    throw ParseError("mission '" + m.mission_id + "': missing field aspect_set");
  for (const auto& r : j.at("aspect_set")) {
    auto ratio = r.is_string() ? AspectRatio::parse(r.get<std::string>()) : std::nullopt;
    if (!ratio) throw ParseError("mission '" + m.mission_id + "': bad aspect ratio " + r.dump());
    m.aspect_set.push_back(*ratio);
  }
  if (m.aspect_set.empty()) throw ValidationError("mission '" + m.mission_id + "': aspect_set is empty");
  m.eval_spec = j.contains("eval_spec") ? evaluation_spec_from_json(j.at("eval_spec"), m.mission_id)
                                        : EvaluationSpec{};
  return m;
}

}  // namespace

std::vector<MissionSpec> parse_missions(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("missions: syntax error at line " + std::to_string(line_of_offset(text, e.byte)) + ": " +
                     e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") || !doc.at("format_version").is_number_integer())
    throw ParseError("missions: missing field format_version");
  if (doc.at("format_version").get<int>() != kMissionFormatVersion)
    throw ParseError("missions: unsupported format_version");
  if (!doc.contains("missions") || !doc.at("missions").is_array())
    throw ParseError("missions: missing field missions");
  std::vector<MissionSpec> out;
  std::set<std::string> ids;
  const auto& arr = doc.at("missions");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(parse_mission(arr[i], i));
    if (!ids.insert(out.back().mission_id).second)
      throw ValidationError("duplicate mission_id '" + out.back().mission_id + "'");
  }
  return out;
}

std::vector<MissionSpec> load_missions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mission file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_missions(buf.str());
}

json to_json(const MissionSpec& m) {
  json ratios = json::array();
  for (const auto& r : m.aspect_set) ratios.push_back(r.to_string());
  return {{"mission_id", m.mission_id},
          {"category", to_string(m.category)},
          {"scene_ref", m.scene_ref},
          {"instruction", m.instruction},
          {"bootstrap", m.bootstrap},
          {"aspect_set", std::move(ratios)},
          {"eval_spec", to_json(m.eval_spec)}};
}

json missions_to_json(const std::vector<MissionSpec>& missions) {
  json arr = json::array();
  for (const auto& m : missions) arr.push_back(to_json(m));
  return {{"format_version", kMissionFormatVersion}, {"missions", std::move(arr)}};
}

void validate_mission(const MissionSpec& mission, const SceneModel& scene) {
  if (mission.aspect_set.empty()) throw ValidationError("mission '" + mission.mission_id + "': empty aspect_set");
  if (mission.eval_spec.primary_subject && !scene.find(*mission.eval_spec.primary_subject))
    throw ValidationError("mission '" + mission.mission_id + "': primary_subject '" +
                          *mission.eval_spec.primary_subject + "' not in scene");
}

std::string to_string(CompositionCue c) {
  switch (c) {
    case CompositionCue::thirds: return "thirds";
    case CompositionCue::center: return "center";
    case CompositionCue::leading_lines: return "leading_lines";
    case CompositionCue::frame_within_frame: return "frame_within_frame";
  }
  return "center";
}

std::string to_string(ZonePref z) {
  switch (z) {
    case ZonePref::ground: return "ground";
    case ZonePref::elevated: return "elevated";
    case ZonePref::aerial: return "aerial";
    case ZonePref::interior: return "interior";
  }
  return "ground";
}

std::string to_string(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "x";
}

bool Blueprint::wants_thirds() const {
  return std::find(composition_cues.begin(), composition_cues.end(), CompositionCue::thirds) !=
         composition_cues.end();
}

json to_json(const Blueprint& b) {
  json cues = json::array();
  for (auto c : b.composition_cues) cues.push_back(to_string(c));
  return {{"primary_subject", b.primary_subject ? json(*b.primary_subject) : json(nullptr)},
          {"context_objects", b.context_objects},
          {"composition_cues", std::move(cues)},
          {"angle_pref", to_string(b.angle_pref)},
          {"zone_pref", to_string(b.zone_pref)},
          {"look_toward", to_json(b.look_toward)},
          {"axis_pref", b.axis_pref ? json(to_string(*b.axis_pref)) : json(nullptr)},
          {"symmetry_pref", b.symmetry_pref ? json(*b.symmetry_pref) : json(nullptr)},
          {"vibe", b.vibe},
          {"negatives", b.negatives}};
}

namespace {

ZonePref zone_for_angle(AnglePref a) {
  switch (a) {
    case AnglePref::low:
    case AnglePref::eye: return ZonePref::ground;
    case AnglePref::high: return ZonePref::elevated;
    case AnglePref::top: return ZonePref::aerial;
  }
  return ZonePref::ground;
}

bool look_toward_ok(const Vec3& p, const SceneModel& scene) {
  const Box3d& b = scene.bounds();
  const Vec3 half = b.sizes();  // 2x the half extent
  return p.allFinite() && ((p - b.center()).cwiseAbs().array() <= half.array() + 1e-9).all();
}

}  // namespace

Blueprint build_blueprint_rule_based(const MissionSpec& mission, const SceneModel& scene,
                                     const TopologySummary& topo) {
  Blueprint b;
  const auto& spec = mission.eval_spec;
  if (spec.primary_subject && scene.find(*spec.primary_subject))
    b.primary_subject = spec.primary_subject;
  else if (!topo.dominant_objects.empty())
    b.primary_subject = topo.dominant_objects.front();

  for (const auto& id : topo.dominant_objects) {
    if (b.context_objects.size() >= 3) break;
    if (!b.primary_subject || id != *b.primary_subject) b.context_objects.push_back(id);
  }
  b.composition_cues.push_back(spec.placement_pref && spec.placement_pref->thirds ? CompositionCue::thirds
                                                                                  : CompositionCue::center);
  b.angle_pref = spec.angle_pref.value_or(AnglePref::eye);
  b.zone_pref = zone_for_angle(b.angle_pref);
  b.look_toward = b.primary_subject ? scene.at(*b.primary_subject).center() : scene.bounds().center();

  const Vec3 size = scene.bounds().sizes();
  if (size.x() > 1.5 * size.y())
    b.axis_pref = Axis::x;
  else if (size.y() > 1.5 * size.x())
    b.axis_pref = Axis::y;
  b.symmetry_pref = spec.symmetry;
  b.vibe = mission.instruction.substr(0, 120);
  return b;
}

namespace {

template <typename T>
std::optional<T> enum_field(const json& j, const char* key, std::optional<T> (*parse)(std::string_view)) {
  if (!j.contains(key) || !j.at(key).is_string()) return std::nullopt;
  return parse(j.at(key).get<std::string>());
}

std::optional<CompositionCue> parse_cue(std::string_view s) {
  for (auto c : {CompositionCue::thirds, CompositionCue::center, CompositionCue::leading_lines,
                 CompositionCue::frame_within_frame})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::optional<ZonePref> parse_zone(std::string_view s) {
  for (auto z : {ZonePref::ground, ZonePref::elevated, ZonePref::aerial, ZonePref::interior})
    if (to_string(z) == s) return z;
  return std::nullopt;
}

std::optional<Axis> parse_axis(std::string_view s) {
  for (auto a : {Axis::x, Axis::y, Axis::z})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

std::optional<std::vector<std::string>> string_list(const json& j, const char* key, std::size_t max_len) {
  if (!j.contains(key) || !j.at(key).is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) return std::nullopt;
    out.push_back(v.get<std::string>().substr(0, max_len));
  }
  return out;
}

}  // namespace

AdvisedBlueprint merge_blueprint_response(std::optional<std::string_view> raw, const Blueprint& fallback,
                                          const SceneModel& scene) {
  AdvisedBlueprint out{fallback, {}, std::nullopt};
  if (!raw) {
    out.failure = "advisor unreachable";
    return out;
  }
  json j = json::parse(raw->begin(), raw->end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    out.failure = "malformed blueprint response";
    return out;
  }
  Blueprint& b = out.blueprint;
  auto miss = [&](const char* field) { out.fallback_fields.emplace_back(field); };

  if (j.contains("primary_subject") && j.at("primary_subject").is_string() &&
      scene.find(j.at("primary_subject").get<std::string>()))
    b.primary_subject = j.at("primary_subject").get<std::string>();
  else
    miss("primary_subject");

  if (auto ids = string_list(j, "context_objects", 256);
      ids && std::all_of(ids->begin(), ids->end(), [&](const auto& id) { return scene.find(id) != nullptr; }))
    b.context_objects = *ids;
  else
    miss("context_objects");

  if (auto names = string_list(j, "composition_cues", 64)) {
    std::vector<CompositionCue> cues;
    for (const auto& n : *names)
      if (auto c = parse_cue(n)) cues.push_back(*c);
    if (cues.size() == names->size() && !cues.empty())
      b.composition_cues = cues;
    else
      miss("composition_cues");
  } else {
    miss("composition_cues");
  }

  if (auto a = enum_field<AnglePref>(j, "angle_pref", parse_angle_pref)) b.angle_pref = *a; else miss("angle_pref");
  if (auto z = enum_field<ZonePref>(j, "zone_pref", parse_zone)) b.zone_pref = *z; else miss("zone_pref");

  if (auto p = j.contains("look_toward") ? vec3_from_json(j.at("look_toward")) : std::nullopt;
      p && look_toward_ok(*p, scene))
    b.look_toward = *p;
  else
    miss("look_toward");

  if (j.contains("axis_pref") && j.at("axis_pref").is_null())
    b.axis_pref.reset();
  else if (auto a = enum_field<Axis>(j, "axis_pref", parse_axis))
    b.axis_pref = *a;
  else
    miss("axis_pref");

  if (j.contains("symmetry_pref") && j.at("symmetry_pref").is_boolean())
    b.symmetry_pref = j.at("symmetry_pref").get<bool>();
  else if (j.contains("symmetry_pref") && j.at("symmetry_pref").is_null())
    b.symmetry_pref.reset();
  else
    miss("symmetry_pref");

  if (auto v = string_field(j, "vibe")) b.vibe = v->substr(0, 500); else miss("vibe");
  if (auto n = string_list(j, "negatives", 200)) b.negatives = *n; else miss("negatives");
  return out;
}

AdvisedBlueprint build_blueprint_advised(const MissionSpec& mission, const SceneModel& scene,
                                         const TopologySummary& topo, AdvisorClient& advisor) {
  const Blueprint fallback = build_blueprint_rule_based(mission, scene, topo);
  const json payload = {{"mission", to_json(mission)},
                        {"geometric_summary", summary_to_json(geometric_summary(scene))},
                        {"topology", topology_to_json(topo)}};
  const auto raw = advisor.request(AdvisorRole::blueprint, payload);
  return merge_blueprint_response(raw ? std::optional<std::string_view>(*raw) : std::nullopt, fallback, scene);
}

}  // namespace camsearch
