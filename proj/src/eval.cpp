#include "camsearch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

namespace camsearch {

double quality_composite(const ExternalScores& s) {
  for (double v : {s.iaa, s.iqa, s.ista})
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("external score outside [0, 1]");
  return 0.40 * s.iaa + 0.20 * s.iqa + 0.40 * s.ista;
}

double TaskResult::m_qs() const {
  if (!scores) throw std::logic_error("task " + mission_id + " has no external scores");
  return quality_composite(*scores);
}

json to_json(const TaskResult& r) {
  json j = {{"mission_id", r.mission_id},
            {"method", r.method},
            {"category", r.category},
            {"completed", r.completed},
            {"failure_category", r.failure_category ? json(*r.failure_category) : json(nullptr)},
            {"preview_renders", r.preview_renders}};
  if (r.scores) {
    j["scores"] = {{"iaa", r.scores->iaa}, {"iqa", r.scores->iqa}, {"ista", r.scores->ista}, {"source", r.scores->source}};
    j["m_qs"] = r.m_qs();
  }
  if (r.diagnostics) j["diagnostics"] = to_json(*r.diagnostics);
  return j;
}

double success_at(const std::vector<TaskResult>& results, double threshold) {
  int n = 0, hits = 0;
  for (const auto& r : results) {
    if (!r.completed || !r.scores) continue;
    ++n;
    if (r.m_qs() >= threshold) ++hits;
  }
  if (n == 0) throw std::invalid_argument("success rate needs at least one scored result");
  return static_cast<double>(hits) / n;
}

namespace {

bool usable(const TaskResult& r) { return r.completed && r.scores.has_value(); }

}  // namespace

FilterResult common_completed_filter(const ResultsByMethod& by_method) {
  if (by_method.size() < 2) throw std::invalid_argument("filtering needs at least two methods");
  std::set<std::string> all;
  std::map<std::string, std::string> category;
  for (const auto& [method, results] : by_method)
    for (const auto& r : results) {
      all.insert(r.mission_id);
      category.emplace(r.mission_id, r.category);
    }
  FilterResult out;
  for (const auto& id : all) {
    std::map<std::string, std::string> failures;
    for (const auto& [method, results] : by_method) {
      auto it = std::find_if(results.begin(), results.end(), [&](const TaskResult& r) { return r.mission_id == id; });
      if (it == results.end()) failures[method] = "missing";
      else if (!usable(*it)) failures[method] = it->failure_category.value_or(it->completed ? "unscored" : "incomplete");
    }
    if (failures.empty()) {
      out.retained.push_back(id);
      ++out.category_counts[category[id]];
    } else {
      out.excluded[id] = std::move(failures);
    }
  }
  return out;
}

namespace {

const TaskResult* find_task(const std::vector<TaskResult>& results, const std::string& id) {
  for (const auto& r : results)
    if (r.mission_id == id && usable(r)) return &r;
  return nullptr;
}

MethodSummary summarize(const std::string& method, const std::vector<const TaskResult*>& tasks, double threshold) {
  MethodSummary s;
  s.method = method;
  s.tasks = static_cast<int>(tasks.size());
  if (tasks.empty()) return s;
  std::map<std::string, std::pair<double, int>> cats;
  SearchDiagnostics diag;
  int diag_n = 0;
  int hits = 0;
  for (const auto* t : tasks) {
    const double q = t->m_qs();
    s.mean += q;
    s.mean_iaa += t->scores->iaa;
    s.mean_iqa += t->scores->iqa;
    s.mean_ista += t->scores->ista;
    s.mean_previews += t->preview_renders;
    if (q >= threshold) ++hits;
    auto& c = cats[t->category];
    c.first += q;
    ++c.second;
    if (t->diagnostics) {
      diag.coverage += t->diagnostics->coverage;
      diag.collapse += t->diagnostics->collapse;
      diag.revisit += t->diagnostics->revisit;
      diag.candidates += t->diagnostics->candidates;
      diag.distinct_regions += t->diagnostics->distinct_regions;
      ++diag_n;
    }
  }
  const double n = static_cast<double>(tasks.size());
  s.mean /= n;
  s.mean_iaa /= n;
  s.mean_iqa /= n;
  s.mean_ista /= n;
  s.mean_previews /= n;
  s.success = hits / n;
  double var = 0.0;
  for (const auto* t : tasks) var += (t->m_qs() - s.mean) * (t->m_qs() - s.mean);
  s.stddev = tasks.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  for (const auto& [cat, acc] : cats) s.category_means[cat] = acc.first / acc.second;
  if (diag_n > 0) {
    diag.coverage /= diag_n;
    diag.collapse /= diag_n;
    diag.revisit /= diag_n;
    s.diagnostics = diag;
  }
  return s;
}

}  // namespace

Report aggregate_report(const ResultsByMethod& by_method, double threshold) {
  Report rep;
  rep.threshold = threshold;
  std::vector<std::string> ids;
  if (by_method.size() >= 2) {
    rep.filter = common_completed_filter(by_method);
    ids = rep.filter->retained;
  } else if (by_method.size() == 1) {
    for (const auto& r : by_method.begin()->second)
      if (usable(r)) ids.push_back(r.mission_id);
  }
  for (const auto& [method, results] : by_method) {
    std::vector<const TaskResult*> tasks;
    for (const auto& id : ids)
      if (const auto* t = find_task(results, id)) tasks.push_back(t);
    rep.methods.push_back(summarize(method, tasks, threshold));
  }
  for (auto a = by_method.begin(); a != by_method.end(); ++a)
    for (auto b = std::next(a); b != by_method.end(); ++b) {
      PairedWins w{a->first, b->first};
      for (const auto& id : ids) {
        const double qa = find_task(a->second, id)->m_qs();
        const double qb = find_task(b->second, id)->m_qs();
        if (qa > qb) ++w.wins_a;
        else if (qb > qa) ++w.wins_b;
        else ++w.ties;
      }
      rep.wins.push_back(w);
    }
  return rep;
}

json Report::to_json() const {
  json methods_doc = json::array();
  for (const auto& m : methods) {
    json j = {{"method", m.method},     {"tasks", m.tasks},         {"mean_m_qs", m.mean},
              {"std_m_qs", m.stddev},   {"success", m.success},     {"mean_iaa", m.mean_iaa},
              {"mean_iqa", m.mean_iqa}, {"mean_ista", m.mean_ista}, {"category_means", m.category_means},
              {"mean_previews", m.mean_previews}};
    if (m.diagnostics) j["diagnostics"] = camsearch::to_json(*m.diagnostics);
    methods_doc.push_back(std::move(j));
  }
  json wins_doc = json::array();
  for (const auto& w : wins)
    wins_doc.push_back({{"a", w.a}, {"b", w.b}, {"wins_a", w.wins_a}, {"wins_b", w.wins_b}, {"ties", w.ties}});
  json j = {{"threshold", threshold}, {"methods", std::move(methods_doc)}, {"paired_wins", std::move(wins_doc)}};
  if (filter) {
    j["retained"] = filter->retained;
    j["excluded"] = filter->excluded;
    j["category_counts"] = filter->category_counts;
  }
  return j;
}

std::string Report::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(18) << "method" << std::right << std::setw(6) << "n" << std::setw(16) << "M_qs"
     << std::setw(8) << "Succ" << std::setw(8) << "IAA" << std::setw(8) << "IQA" << std::setw(8) << "ISTA"
     << std::setw(9) << "renders" << '\n';
  for (const auto& m : methods) {
    std::ostringstream mean;
    mean << std::fixed << std::setprecision(3) << m.mean << " +/- " << m.stddev;
    os << std::left << std::setw(18) << m.method << std::right << std::setw(6) << m.tasks << std::setw(16)
       << mean.str() << std::setw(8) << m.success << std::setw(8) << m.mean_iaa << std::setw(8) << m.mean_iqa
       << std::setw(8) << m.mean_ista << std::setw(9) << std::setprecision(1) << m.mean_previews
       << std::setprecision(3) << '\n';
  }
  os << "\nper category\n";
  for (const auto& m : methods) {
    os << "  " << m.method;
    for (const auto& [cat, mean] : m.category_means) os << "  " << cat << "=" << mean;
    os << '\n';
  }
  bool any_diag = false;
  for (const auto& m : methods) any_diag = any_diag || m.diagnostics;
  if (any_diag) {
    os << "\ndiagnostics       coverage collapse revisit\n";
    for (const auto& m : methods)
      if (m.diagnostics)
        os << "  " << std::left << std::setw(16) << m.method << std::right << std::setw(8) << m.diagnostics->coverage
           << std::setw(9) << m.diagnostics->collapse << std::setw(8) << m.diagnostics->revisit << '\n';
  }
  if (!wins.empty()) {
    os << "\npaired wins\n";
    for (const auto& w : wins)
      os << "  " << w.a << " vs " << w.b << ": " << w.wins_a << " / " << w.wins_b << " (ties " << w.ties << ")\n";
  }
  if (filter) {
    os << "\nretained " << filter->retained.size() << ", excluded " << filter->excluded.size();
    for (const auto& [cat, n] : filter->category_counts) os << "  " << cat << "=" << n;
    os << '\n';
  }
  return os.str();
}

ExternalScores synthetic_scores(const CameraState& camera, const SceneModel& scene, const MissionSpec& mission,
                                const Blueprint& blueprint, const ScaleBands& bands) {
  const StubSignals s = stub_visual_signals(camera, scene, mission, blueprint, bands);
  const SceneObject* subject = blueprint.primary_subject ? scene.find(*blueprint.primary_subject) : nullptr;
  const double m2 = subject ? rule_m2(camera, *subject, mission.eval_spec.placement_pref) : 1.0;
  ExternalScores out;
  out.iaa = std::clamp(0.5 * s.m5 + 0.5 * s.m3, 0.0, 1.0);
  out.iqa = std::clamp(s.m4, 0.0, 1.0);
  out.ista = std::clamp(0.5 * s.m6 + 0.25 * s.m1 + 0.25 * m2, 0.0, 1.0);
  out.source = "synthetic";
  return out;
}

std::optional<ExternalScores> command_scores(const std::string& command, const std::filesystem::path& image) {
  std::string quoted = "'";
  for (char c : image.string()) quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
  quoted += "'";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen((command + " " + quoted).c_str(), "r"), pclose);
  if (!pipe) return std::nullopt;
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe.get())) out.append(buf, n);
  const json j = json::parse(out, nullptr, false);
  if (!j.is_object()) return std::nullopt;
  auto a = number_field(j, "iaa"), q = number_field(j, "iqa"), s = number_field(j, "ista");
  if (!a || !q || !s) return std::nullopt;
  ExternalScores sc{*a, *q, *s, command};
  for (double v : {sc.iaa, sc.iqa, sc.ista})
    if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
  return sc;
}

TaskResult task_result_from_log(const json& log, const std::string& scorer, const std::filesystem::path& run_dir) {
  TaskResult r;
  const json& mission_doc = log.at("mission");
  r.mission_id = mission_doc.at("mission_id").get<std::string>();
  r.category = mission_doc.at("category").get<std::string>();
  r.method = log.at("method").get<std::string>();
  r.preview_renders = log.at("preview_renders").get<int>();
  const json& fin = log.at("final");
  r.completed = fin.at("completed").get<bool>();
  if (fin.at("failure_category").is_string()) r.failure_category = fin.at("failure_category").get<std::string>();
  if (log.contains("diagnostics") && log.at("diagnostics").is_object()) {
    const json& d = log.at("diagnostics");
    SearchDiagnostics diag;
    diag.coverage = d.at("coverage").get<double>();
    diag.collapse = d.at("collapse").get<double>();
    diag.revisit = d.at("revisit").get<double>();
    diag.candidates = d.at("candidates").get<int>();
    diag.distinct_regions = d.at("distinct_regions").get<int>();
    r.diagnostics = diag;
  }
  if (!r.completed) return r;

  if (scorer == "synthetic") {
    const SceneModel scene = parse_scene(log.at("scene").dump());
    const auto missions = parse_missions(json{{"format_version", 1}, {"missions", json::array({mission_doc})}}.dump());
    auto cam = camera_from_json(fin.at("camera"));
    if (!cam) throw ParseError("run log final camera is malformed");
    const Blueprint rule_based = build_blueprint_rule_based(missions.front(), scene, topology_summary(scene));
    const Blueprint logged =
        log.contains("blueprint") ? merge_blueprint_response(log.at("blueprint").dump(), rule_based, scene).blueprint
                                  : rule_based;
    r.scores = synthetic_scores(*cam, scene, missions.front(), logged);
  } else {
    if (!fin.contains("image")) {
      r.completed = false;
      r.failure_category = "no_final_image";
      return r;
    }
    r.scores = command_scores(scorer, run_dir / fin.at("image").get<std::string>());
    if (!r.scores) r.failure_category = "scorer_failed";
  }
  return r;
}

}  // namespace camsearch
