#include "camsearch/renderer.hpp"

#include <chrono>
#include <csignal>
#include <fstream>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

namespace camsearch {

namespace {

std::string number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

SubprocessBackend::SubprocessBackend(std::vector<std::string> command, std::filesystem::path scene_path)
    : command_(std::move(command)), scene_path_(std::move(scene_path)) {
  if (command_.empty()) throw std::invalid_argument("subprocess renderer needs a command");
}

std::vector<std::string> SubprocessBackend::arguments(const RenderRequest& request) const {
  const CameraState& c = request.camera;
  std::vector<std::string> args = command_;
  args.push_back(scene_path_.string());
  for (int i = 0; i < 3; ++i) args.push_back(number(c.position[i]));
  for (int i = 0; i < 3; ++i) args.push_back(number(c.look_at[i]));
  args.push_back(number(c.focal_mm));
  args.push_back(number(c.f_number));
  args.push_back(std::to_string(c.aspect.width));
  args.push_back(std::to_string(c.aspect.height));
  args.push_back(number(c.aspect.value()));
  args.push_back(std::to_string(request.resolution.width));
  args.push_back(std::to_string(request.resolution.height));
  args.push_back(std::to_string(request.sample_cap));
  args.push_back(request.out_path.string());
  return args;
}

RenderResult SubprocessBackend::render(const SceneModel& scene, const RenderRequest& request) {
  if (request.out_path.empty()) throw std::invalid_argument("subprocess render needs an output path");
  std::error_code ec;
  std::filesystem::remove(request.out_path, ec);

  const auto args = arguments(request);
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) throw RenderFailure(RenderFailureKind::backend_crash, "fork failed");
  if (pid == 0) {
    execvp(argv[0], argv.data());
    _exit(127);
  }

  int status = 0;
  const auto deadline = start + std::chrono::duration<double>(request.timeout_s);
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw RenderFailure(RenderFailureKind::backend_crash, "waitpid failed");
    if (std::chrono::steady_clock::now() > deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw RenderFailure(RenderFailureKind::timeout_no_first_image,
                          "renderer exceeded " + number(request.timeout_s) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (WIFSIGNALED(status))
    throw RenderFailure(RenderFailureKind::backend_crash, "renderer killed by signal " + std::to_string(WTERMSIG(status)));
  const int code = WEXITSTATUS(status);
  if (code == 124) throw RenderFailure(RenderFailureKind::timeout_no_first_image, "renderer reported a timeout");
  if (code != 0 && code != 2)
    throw RenderFailure(RenderFailureKind::backend_crash, "renderer exited with code " + std::to_string(code));
  if (code == 2 || !std::filesystem::exists(request.out_path))
    throw RenderFailure(RenderFailureKind::no_final_image, "renderer produced no image");

  RenderResult out;
  try {
    out.image = read_png(request.out_path);
  } catch (const std::exception& e) {
    throw RenderFailure(RenderFailureKind::no_final_image, e.what());
  }
  if (out.image.width() != request.resolution.width || out.image.height() != request.resolution.height)
    throw RenderFailure(RenderFailureKind::no_final_image, "renderer image has the wrong size");
  out.path = request.out_path;
  out.inside_geometry = scene.inside_any(request.camera.position);
  out.stats = {elapsed, name(), request.sample_cap};

  std::ifstream stats_file(request.out_path.string() + ".stats");
  if (stats_file) {
    const json stats = json::parse(stats_file, nullptr, false);
    if (stats.is_object()) {
      out.stats.backend = stats.value("backend", out.stats.backend);
      out.stats.samples = stats.value("samples", out.stats.samples);
      out.stats.render_time = stats.value("render_time", out.stats.render_time);
    }
  }
  return out;
}

}  // namespace camsearch
