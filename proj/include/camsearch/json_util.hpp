// Small helpers for reading and writing structured documents.
#pragma once

#include "camsearch/geometry.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace camsearch {

using json = nlohmann::json;

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

/// Reads a finite 3-vector; nullopt on wrong shape or type.
inline std::optional<Vec3> vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) return std::nullopt;
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) return std::nullopt;
    out[i] = j[i].get<double>();
    if (!std::isfinite(out[i])) return std::nullopt;
  }
  return out;
}

/// Finite number or nullopt.
inline std::optional<double> number_from_json(const json& j) {
  if (!j.is_number()) return std::nullopt;
  const double v = j.get<double>();
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<double> number_field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
  return number_from_json(obj.at(key));
}

inline std::optional<std::string> string_field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string()) return std::nullopt;
  return obj.at(key).get<std::string>();
}

/// 1-based line of a byte offset in `text`.
inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace camsearch
