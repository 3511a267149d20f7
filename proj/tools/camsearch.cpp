// Command-line front end: search runs, baselines, evaluation, the built-in
// renderer behind the subprocess contract, and synthetic suite generation.
#include "camsearch/eval.hpp"
#include "camsearch/synthetic.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

using namespace camsearch;
namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string mission_file;
  std::string mission_id;
  std::string scene_file;
  std::string out_dir;
  int rounds = 6;
  int candidates = 4;
  std::uint64_t seed = 0;
  int workers = 1;
  bool no_high_explore = false;
  bool no_region_memory = false;
  std::string advisor = "stub";
  std::string renderer_cmd;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--mission", o.mission_file, "missions document")->required()->check(CLI::ExistingFile);
  cmd->add_option("--mission-id", o.mission_id, "mission to run (default: first)");
  cmd->add_option("--scene", o.scene_file, "scene document (default: the mission's scene_ref)");
  cmd->add_option("--out", o.out_dir, "run directory")->required();
  cmd->add_option("--rounds", o.rounds, "rounds T")->check(CLI::PositiveNumber);
  cmd->add_option("--candidates", o.candidates, "candidates per round K")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "rng seed");
  cmd->add_option("--workers", o.workers, "parallel render workers")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-high-explore", o.no_high_explore, "disable the high-explore lane");
  cmd->add_flag("--no-region-memory", o.no_region_memory, "treat every region as unknown");
  cmd->add_option("--advisor", o.advisor, "'stub' or an http:// advisor endpoint");
  cmd->add_option("--renderer-cmd", o.renderer_cmd, "external renderer command (default: built-in rasterizer)");
}

struct Loaded {
  MissionSpec mission;
  SceneModel scene;
  fs::path scene_path;
};

Loaded load_inputs(const RunOptions& o) {
  const auto missions = load_missions(o.mission_file);
  const MissionSpec* chosen = &missions.front();
  if (!o.mission_id.empty()) {
    auto it = std::find_if(missions.begin(), missions.end(), [&](const auto& m) { return m.mission_id == o.mission_id; });
    if (it == missions.end()) throw std::invalid_argument("no mission with id " + o.mission_id);
    chosen = &*it;
  }
  fs::path scene_path = o.scene_file.empty() ? fs::path(o.mission_file).parent_path() / chosen->scene_ref
                                             : fs::path(o.scene_file);
  return {*chosen, load_scene(scene_path), scene_path};
}

SearchConfig make_config(const RunOptions& o) {
  SearchConfig cfg;
  cfg.rounds = o.rounds;
  cfg.candidates = o.candidates;
  cfg.rng_seed = o.seed;
  cfg.workers = o.workers;
  cfg.high_explore_enabled = !o.no_high_explore;
  cfg.region_memory_enabled = !o.no_region_memory;
  cfg.out_dir = o.out_dir;
  return cfg;
}

std::unique_ptr<AdvisorClient> make_advisor(const RunOptions& o, const Loaded& in) {
  if (o.advisor == "stub") return std::make_unique<ScriptedAdvisor>(in.scene, in.mission, o.seed);
  if (o.advisor == "offline") return std::make_unique<OfflineAdvisor>();
  return std::make_unique<RemoteAdvisor>(o.advisor);
}

std::unique_ptr<RenderBackend> make_renderer(const RunOptions& o, const Loaded& in) {
  if (o.renderer_cmd.empty()) return std::make_unique<BuiltinRenderer>();
  std::vector<std::string> argv;
  std::istringstream is(o.renderer_cmd);
  for (std::string tok; is >> tok;) argv.push_back(tok);
  return std::make_unique<SubprocessBackend>(argv, fs::absolute(in.scene_path));
}

void print_summary(const SearchResult& r) {
  std::cout << r.method << ": " << (r.completed ? "completed" : "failed");
  if (r.failure_category) std::cout << " (" << *r.failure_category << ")";
  std::cout << ", previews " << r.preview_renders;
  if (r.incumbent) std::cout << ", J " << r.incumbent->score << ", ratio " << r.ratio.ratio.to_string();
  if (r.diagnostics)
    std::cout << ", coverage " << r.diagnostics->coverage << ", revisit " << r.diagnostics->revisit;
  std::cout << '\n';
}

int cmd_render(const std::vector<std::string>& args) {
  if (args.size() != 16) {
    std::cerr << "usage: camsearch render <scene> px py pz lx ly lz f d r_num r_den r_value width height samples out\n";
    return 64;
  }
  try {
    const SceneModel scene = load_scene(args[0]);
    auto num = [&](int i) { return std::stod(args[i]); };
    CameraState cam;
    cam.position = Vec3(num(1), num(2), num(3));
    cam.look_at = Vec3(num(4), num(5), num(6));
    cam.focal_mm = num(7);
    cam.f_number = num(8);
    cam.aspect = {std::stoi(args[9]), std::stoi(args[10])};
    RenderRequest req;
    req.camera = cam;
    req.resolution = {std::stoi(args[12]), std::stoi(args[13])};
    req.sample_cap = std::stoi(args[14]);
    req.out_path = args[15];
    const RenderResult r = BuiltinRenderer().render(scene, req);
    std::ofstream(req.out_path.string() + ".stats")
        << json{{"backend", r.stats.backend}, {"samples", r.stats.samples}, {"render_time", r.stats.render_time}}.dump()
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "render failed: " << e.what() << '\n';
    return 3;
  }
}

void write_suite(const fs::path& dir, int count, std::uint64_t seed) {
  fs::create_directories(dir / "scenes");
  std::vector<MissionSpec> missions;
  for (const auto& e : synthetic_suite(count, seed)) {
    save_scene(e.scene, dir / e.mission.scene_ref);
    missions.push_back(e.mission);
  }
  std::ofstream(dir / "missions.json") << missions_to_json(missions).dump(2) << '\n';
}

int cmd_eval(const std::string& runs_dir, const std::string& scorer, double threshold, const std::string& report_path) {
  ResultsByMethod by_method;
  std::vector<fs::path> logs;
  for (const auto& entry : fs::recursive_directory_iterator(runs_dir))
    if (entry.is_regular_file() && entry.path().filename() == "run.json") logs.push_back(entry.path());
  std::sort(logs.begin(), logs.end());
  for (const auto& p : logs) {
    std::ifstream in(p);
    const json log = json::parse(in);
    TaskResult t = task_result_from_log(log, scorer, p.parent_path());
    by_method[t.method].push_back(std::move(t));
  }
  if (by_method.empty()) {
    std::cerr << "no run.json found under " << runs_dir << '\n';
    return 1;
  }
  const Report rep = aggregate_report(by_method, threshold);
  const std::string text = rep.to_text();
  std::cout << text;
  if (!report_path.empty()) {
    std::ofstream(report_path) << rep.to_json().dump(2) << '\n';
    std::ofstream(report_path + ".txt") << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop camera search over box scenes"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "search one mission");
  add_run_options(run, run_opts);

  RunOptions base_opts;
  std::string policy = "random_search";
  int random_budget = 24;
  auto* baseline = app.add_subcommand("baseline", "run a fixed-budget baseline policy");
  add_run_options(baseline, base_opts);
  baseline->add_option("--policy", policy, "single_step | single_chain | anchor_best_of_n | random_search");
  baseline->add_option("--random-budget", random_budget, "views for random_search")->check(CLI::PositiveNumber);

  std::string runs_dir, scorer = "synthetic", report_path;
  double threshold = kSuccessThreshold;
  auto* eval = app.add_subcommand("eval", "score and compare finished runs");
  eval->add_option("--runs", runs_dir, "directory searched recursively for run.json")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--scorer", scorer, "'synthetic' or a command taking an image path and printing JSON scores");
  eval->add_option("--threshold", threshold, "success threshold");
  eval->add_option("--report", report_path, "report path (JSON; a .txt table is written next to it)");

  std::vector<std::string> render_args;
  auto* render = app.add_subcommand("render", "built-in renderer behind the external renderer contract");
  render->add_option("args", render_args, "scene px py pz lx ly lz f d r_num r_den r_value width height samples out");
  render->allow_extras();

  std::string suite_dir;
  int suite_count = 20;
  std::uint64_t suite_seed = 2024;
  auto* gen = app.add_subcommand("gen-suite", "write the seeded synthetic scenes and missions");
  gen->add_option("--out", suite_dir, "output directory")->required();
  gen->add_option("--count", suite_count, "missions")->check(CLI::PositiveNumber);
  gen->add_option("--seed", suite_seed, "suite seed");

  std::string bench_dir;
  int bench_count = 20, bench_seeds = 5;
  auto* bench = app.add_subcommand("bench", "synthetic suite: closed loop, ablations and baselines, then a report");
  bench->add_option("--out", bench_dir, "output directory")->required();
  bench->add_option("--count", bench_count, "missions")->check(CLI::PositiveNumber);
  bench->add_option("--seeds", bench_seeds, "rng seeds per mission")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *baseline) {
      const RunOptions& o = *run ? run_opts : base_opts;
      const Loaded in = load_inputs(o);
      auto advisor = make_advisor(o, in);
      auto renderer = make_renderer(o, in);
      fs::create_directories(o.out_dir);
      SearchResult r;
      if (*run) {
        r = run_search(in.mission, in.scene, make_config(o), *advisor, *renderer);
      } else {
        auto p = parse_baseline(policy);
        if (!p) throw std::invalid_argument("unknown policy " + policy);
        r = run_baseline(*p, in.mission, in.scene, make_config(o), *advisor, *renderer, random_budget);
      }
      print_summary(r);
      return r.completed ? 0 : 2;
    }
    if (*eval) return cmd_eval(runs_dir, scorer, threshold, report_path);
    if (*render) {
      auto extra = render->remaining();
      render_args.insert(render_args.end(), extra.begin(), extra.end());
      return cmd_render(render_args);
    }
    if (*gen) {
      write_suite(suite_dir, suite_count, suite_seed);
      std::cout << "wrote " << suite_count << " missions to " << suite_dir << '\n';
      return 0;
    }
    if (*bench) {
      const auto start = std::chrono::steady_clock::now();
      const auto suite = synthetic_suite(bench_count);
      BuiltinRenderer renderer;
      struct Variant {
        std::string name;
        std::optional<BaselinePolicy> policy;
        bool high_explore = true, region_memory = true;
      };
      const std::vector<Variant> variants{{"closed_loop", {}},
                                          {"no_high_explore", {}, false, true},
                                          {"no_region_memory", {}, true, false},
                                          {"single_step", BaselinePolicy::single_step},
                                          {"single_chain", BaselinePolicy::single_chain},
                                          {"anchor_best_of_n", BaselinePolicy::anchor_best_of_n},
                                          {"random_search", BaselinePolicy::random_search}};
      for (const auto& e : suite)
        for (int s = 0; s < bench_seeds; ++s)
          for (const auto& v : variants) {
            SearchConfig cfg;
            cfg.rng_seed = static_cast<std::uint64_t>(s);
            cfg.high_explore_enabled = v.high_explore;
            cfg.region_memory_enabled = v.region_memory;
            cfg.out_dir = fs::path(bench_dir) / v.name / (e.mission.mission_id + "_s" + std::to_string(s));
            ScriptedAdvisor advisor(e.scene, e.mission, cfg.rng_seed);
            SearchResult r = v.policy ? run_baseline(*v.policy, e.mission, e.scene, cfg, advisor, renderer)
                                      : run_search(e.mission, e.scene, cfg, advisor, renderer);
            if (!v.policy) {
              r.log["method"] = v.name;
              std::ofstream(cfg.out_dir / "run.json") << r.log.dump(2) << '\n';
            }
          }
      std::cout << "suite finished in "
                << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n";
      return cmd_eval(bench_dir, "synthetic", kSuccessThreshold, (fs::path(bench_dir) / "report.json").string());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
