#include "camsearch/evaluation.hpp"

#include "camsearch/scene.hpp"

#include <algorithm>
#include <sstream>

namespace camsearch {

std::optional<PlacementPref> PlacementPref::parse(std::string_view text) {
  PlacementPref pref;
  std::string token;
  std::stringstream ss{std::string(text)};
  bool any = false;
  while (std::getline(ss, token, '_')) {
    any = true;
    if (token == "thirds") {
      pref.thirds = true;
    } else if (token == "left" || token == "right") {
      if (pref.horizontal != HorizontalSide::none) return std::nullopt;
      pref.horizontal = token == "left" ? HorizontalSide::left : HorizontalSide::right;
    } else if (token == "top" || token == "bottom") {
      if (pref.vertical != VerticalSide::none) return std::nullopt;
      pref.vertical = token == "top" ? VerticalSide::top : VerticalSide::bottom;
    } else if (token != "center") {
      return std::nullopt;
    }
  }
  if (!any) return std::nullopt;
  return pref;
}

std::string PlacementPref::to_string() const {
  std::vector<std::string> parts;
  if (thirds) parts.emplace_back("thirds");
  if (vertical != VerticalSide::none) parts.emplace_back(vertical == VerticalSide::top ? "top" : "bottom");
  if (horizontal != HorizontalSide::none)
    parts.emplace_back(horizontal == HorizontalSide::left ? "left" : "right");
  if (parts.empty()) return "center";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "_" + parts[i];
  return out;
}

std::optional<ScalePref> parse_scale_pref(std::string_view s) {
  if (s == "small") return ScalePref::small;
  if (s == "medium") return ScalePref::medium;
  if (s == "large") return ScalePref::large;
  return std::nullopt;
}

std::optional<AnglePref> parse_angle_pref(std::string_view s) {
  if (s == "low") return AnglePref::low;
  if (s == "eye") return AnglePref::eye;
  if (s == "high") return AnglePref::high;
  if (s == "top") return AnglePref::top;
  return std::nullopt;
}

std::string to_string(ScalePref s) {
  switch (s) {
    case ScalePref::small: return "small";
    case ScalePref::medium: return "medium";
    case ScalePref::large: return "large";
  }
  return "medium";
}

std::string to_string(AnglePref a) {
  switch (a) {
    case AnglePref::low: return "low";
    case AnglePref::eye: return "eye";
    case AnglePref::high: return "high";
    case AnglePref::top: return "top";
  }
  return "eye";
}

const CoverageBand& ScaleBands::band(ScalePref s) const {
  switch (s) {
    case ScalePref::small: return small;
    case ScalePref::medium: return medium;
    case ScalePref::large: return large;
  }
  return medium;
}

AngleWindow preferred_elevation(AnglePref a) {
  switch (a) {
    case AnglePref::low: return {-35.0, -3.0};
    case AnglePref::eye: return {-5.0, 15.0};
    case AnglePref::high: return {25.0, 60.0};
    case AnglePref::top: return {70.0, 90.0};
  }
  return {-5.0, 15.0};
}

AngleWindow tolerated_elevation(AnglePref a) {
  switch (a) {
    case AnglePref::low: return {-90.0, 30.0};
    case AnglePref::eye: return {-45.0, 60.0};
    case AnglePref::high: return {5.0, 90.0};
    case AnglePref::top: return {40.0, 90.0};
  }
  return {-90.0, 90.0};
}

bool EvaluationSpec::hard_fail_enabled(std::string_view tag) const {
  if (tag == "invalid_camera" || hard_fail_conditions.empty()) return true;
  return std::find(hard_fail_conditions.begin(), hard_fail_conditions.end(), tag) !=
         hard_fail_conditions.end();
}

namespace {

std::optional<bool> bool_field(const json& j, const char* key, const std::string& owner) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_boolean()) throw ParseError("mission '" + owner + "': " + key + " must be a boolean");
  return j.at(key).get<bool>();
}

std::optional<std::string> opt_string(const json& j, const char* key, const std::string& owner) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw ParseError("mission '" + owner + "': " + key + " must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

EvaluationSpec evaluation_spec_from_json(const json& j, const std::string& owner) {
  if (!j.is_object()) throw ParseError("mission '" + owner + "': eval_spec must be an object");
  EvaluationSpec spec;
  spec.primary_subject = opt_string(j, "primary_subject", owner);
  if (auto p = opt_string(j, "placement_pref", owner)) {
    spec.placement_pref = PlacementPref::parse(*p);
    if (!spec.placement_pref) throw ParseError("mission '" + owner + "': unknown placement_pref '" + *p + "'");
  }
  if (auto s = opt_string(j, "scale_pref", owner)) {
    spec.scale_pref = parse_scale_pref(*s);
    if (!spec.scale_pref) throw ParseError("mission '" + owner + "': unknown scale_pref '" + *s + "'");
  }
  if (auto a = opt_string(j, "angle_pref", owner)) {
    spec.angle_pref = parse_angle_pref(*a);
    if (!spec.angle_pref) throw ParseError("mission '" + owner + "': unknown angle_pref '" + *a + "'");
  }
  spec.symmetry = bool_field(j, "symmetry", owner);
  spec.depth_emphasis = bool_field(j, "depth_emphasis", owner);
  if (j.contains("hard_fail_conditions")) {
    const auto& tags = j.at("hard_fail_conditions");
    if (!tags.is_array()) throw ParseError("mission '" + owner + "': hard_fail_conditions must be a list");
    for (const auto& t : tags) {
      if (!t.is_string() ||
          std::find(kHardFailureTags.begin(), kHardFailureTags.end(), t.get<std::string>()) ==
              kHardFailureTags.end())
        throw ParseError("mission '" + owner + "': unknown hard-failure tag " + t.dump());
      spec.hard_fail_conditions.push_back(t.get<std::string>());
    }
  }
  return spec;
}

json to_json(const EvaluationSpec& spec) {
  json j = json::object();
  j["primary_subject"] = spec.primary_subject ? json(*spec.primary_subject) : json(nullptr);
  j["placement_pref"] = spec.placement_pref ? json(spec.placement_pref->to_string()) : json(nullptr);
  j["scale_pref"] = spec.scale_pref ? json(to_string(*spec.scale_pref)) : json(nullptr);
  j["angle_pref"] = spec.angle_pref ? json(to_string(*spec.angle_pref)) : json(nullptr);
  j["symmetry"] = spec.symmetry ? json(*spec.symmetry) : json(nullptr);
  j["depth_emphasis"] = spec.depth_emphasis ? json(*spec.depth_emphasis) : json(nullptr);
  j["hard_fail_conditions"] = spec.hard_fail_conditions;
  return j;
}

}  // namespace camsearch
