#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace camsearch {

enum class AdvisorRole { blueprint, propose, review, reflect, compare, final_ratio };

std::string to_string(AdvisorRole role);

/// Transport to a language-model advisor. Returns the raw response text, or
/// nullopt when the advisor is unreachable. Callers own all validation.
class AdvisorClient {
 public:
  virtual ~AdvisorClient() = default;
  virtual std::optional<std::string> request(AdvisorRole role, const nlohmann::json& payload) = 0;
};

/// Always unreachable; every advisor-backed step takes its fallback path.
class OfflineAdvisor final : public AdvisorClient {
 public:
  std::optional<std::string> request(AdvisorRole, const nlohmann::json&) override { return std::nullopt; }
};

}  // namespace camsearch
