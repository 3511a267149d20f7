// Post-hoc scoring, filtering and comparison of finished runs, plus the
// fixed-budget baseline policies.
#pragma once

#include "camsearch/search.hpp"

#include <map>
#include <string>
#include <vector>

namespace camsearch {

inline constexpr double kSuccessThreshold = 0.55;

struct ExternalScores {
  double iaa = 0.0;
  double iqa = 0.0;
  double ista = 0.0;
  std::string source;
};

/// 0.40 iaa + 0.20 iqa + 0.40 ista. Throws std::invalid_argument when a score
/// lies outside [0, 1].
double quality_composite(const ExternalScores& s);

struct TaskResult {
  std::string mission_id;
  std::string method;
  std::string category;
  bool completed = false;
  std::optional<std::string> failure_category;
  std::optional<ExternalScores> scores;
  std::optional<SearchDiagnostics> diagnostics;
  int preview_renders = 0;

  /// Throws std::logic_error when no scores are attached.
  double m_qs() const;
};
json to_json(const TaskResult& r);

/// Fraction of scored results with m_qs >= threshold. Throws
/// std::invalid_argument on an empty set.
double success_at(const std::vector<TaskResult>& results, double threshold = kSuccessThreshold);

using ResultsByMethod = std::map<std::string, std::vector<TaskResult>>;

struct FilterResult {
  std::vector<std::string> retained;
  /// mission id -> method -> failure category for every excluded mission.
  std::map<std::string, std::map<std::string, std::string>> excluded;
  std::map<std::string, int> category_counts;
};

/// Missions every method completed with scores. Throws std::invalid_argument
/// with fewer than two methods.
FilterResult common_completed_filter(const ResultsByMethod& by_method);

struct MethodSummary {
  std::string method;
  int tasks = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double success = 0.0;
  double mean_iaa = 0.0;
  double mean_iqa = 0.0;
  double mean_ista = 0.0;
  std::map<std::string, double> category_means;
  std::optional<SearchDiagnostics> diagnostics;
  double mean_previews = 0.0;
};

struct PairedWins {
  std::string a;
  std::string b;
  int wins_a = 0;
  int wins_b = 0;
  int ties = 0;
};

struct Report {
  std::vector<MethodSummary> methods;
  std::vector<PairedWins> wins;
  std::optional<FilterResult> filter;
  double threshold = kSuccessThreshold;

  json to_json() const;
  std::string to_text() const;
};

/// Summaries over the common-completed set (or all scored tasks for a single
/// method). Paired wins count strict m_qs differences only.
Report aggregate_report(const ResultsByMethod& by_method, double threshold = kSuccessThreshold);

/// Scores derived from the projection-side reviewer proxies of a final camera.
ExternalScores synthetic_scores(const CameraState& camera, const SceneModel& scene, const MissionSpec& mission,
                                const Blueprint& blueprint, const ScaleBands& bands = {});

/// Runs `command <image>` through the shell and reads {"iaa","iqa","ista"}
/// from its stdout. nullopt on failure or out-of-range output.
std::optional<ExternalScores> command_scores(const std::string& command, const std::filesystem::path& image);

/// TaskResult from a run log written by run_search or run_baseline.
TaskResult task_result_from_log(const json& log, const std::string& scorer, const std::filesystem::path& run_dir);

enum class BaselinePolicy { single_step, single_chain, anchor_best_of_n, random_search };
std::string to_string(BaselinePolicy p);
std::optional<BaselinePolicy> parse_baseline(std::string_view s);

/// Fixed-budget comparison policy on the same scene, bank and reviewer.
/// random_search renders `random_budget` views.
SearchResult run_baseline(BaselinePolicy policy, const MissionSpec& mission, const SceneModel& scene,
                          const SearchConfig& config, AdvisorClient& advisor, RenderBackend& renderer,
                          int random_budget = 24);

}  // namespace camsearch
