#include "camsearch/random.hpp"
#include "camsearch/renderer.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <atomic>
#include <fstream>
#include <set>

using namespace camsearch;
using fixtures::box;

namespace {

CameraState looking(Vec3 from, Vec3 at, double f = 35.0, AspectRatio r = {16, 9}) {
  CameraState c;
  c.position = from;
  c.look_at = at;
  c.focal_mm = f;
  c.aspect = r;
  return c;
}

std::filesystem::path write_script(const std::filesystem::path& dir, const std::string& name, const std::string& body) {
  const auto p = dir / name;
  std::ofstream(p) << "#!/bin/sh\n" << body << '\n';
  std::filesystem::permissions(p, std::filesystem::perms::owner_all);
  return p;
}

struct FlakyBackend final : RenderBackend {
  BuiltinRenderer inner;
  std::atomic<int> calls{0};
  RenderResult render(const SceneModel& scene, const RenderRequest& req) override {
    ++calls;
    if (req.camera.focal_mm == 99.0) throw RenderFailure(RenderFailureKind::backend_crash, "forced");
    return inner.render(scene, req);
  }
  std::string name() const override { return "flaky"; }
};

}  // namespace

TEST_CASE("resolution examples") {
  CHECK(resolution_for({16, 9}, RenderQuality::preview) == Resolution{640, 360});
  CHECK(resolution_for({1, 1}, RenderQuality::preview) == Resolution{640, 640});
  CHECK(resolution_for({3, 2}, RenderQuality::final) == Resolution{2560, 1706});
  CHECK(resolution_for({16, 9}, RenderQuality::final) == Resolution{2560, 1440});
  for (AspectRatio r : {AspectRatio{3, 2}, AspectRatio{9, 16}, AspectRatio{4, 3}, AspectRatio{21, 9}}) {
    const auto res = resolution_for(r, RenderQuality::preview);
    CHECK(res.height % 2 == 0);
    CHECK(std::abs(res.height - 640.0 / r.value()) <= 1.0);
  }
}

TEST_CASE("request settings split preview and final") {
  RenderSettings s;
  s.preview_samples = 500;
  const auto cam = looking({0, -5, 1}, {0, 0, 0});
  const auto p = make_request(cam, RenderQuality::preview, s);
  CHECK(p.sample_cap == kPreviewSampleCap);
  CHECK(p.timeout_s == 300.0);
  const auto f = make_request(cam, RenderQuality::final, s);
  CHECK(f.sample_cap == 256);
  CHECK(f.timeout_s == 3600.0);
  CHECK(f.resolution == Resolution{2560, 1440});
}

TEST_CASE("builtin renders are deterministic and sized") {
  const SceneModel scene = fixtures::plaza();
  BuiltinRenderer r;
  RenderRequest req;
  req.camera = looking({2, -7, 2}, {0, 0, 0.5});
  const auto a = r.render(scene, req);
  const auto b = r.render(scene, req);
  CHECK(a.image.width() == 640);
  CHECK(a.image.height() == 360);
  CHECK(a.image == b.image);
  CHECK(a.stats.backend == "builtin");
  CHECK(a.stats.samples == kPreviewSampleCap);
  CHECK_FALSE(a.inside_geometry);
}

TEST_CASE("looking away shows only the background") {
  const SceneModel scene = fixtures::plaza();
  const auto cam = looking({0, -10, 1}, {0, -20, 1});
  const Image img = rasterize(scene, cam, {64, 36});
  const auto frame = camera_frame(cam);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      CHECK(img.at(x, y) == background_color(frame, (x + 0.5) / img.width(), (y + 0.5) / img.height()));
}

TEST_CASE("centered subject colors the center pixel") {
  const SceneModel scene = fixtures::plaza();
  const auto cam = looking({0, -6, 0.5}, {0, 0, 0.5});
  const Image img = rasterize(scene, cam, {640, 360});
  CHECK(img.at(320, 180) == face_color("hero", 1, -1));
}

TEST_CASE("camera inside geometry is flagged") {
  const SceneModel scene = fixtures::plaza();
  RenderRequest req;
  req.camera = looking({0, 0, 0.5}, {0, 5, 0.5});
  const auto res = BuiltinRenderer().render(scene, req);
  CHECK(res.inside_geometry);
  CHECK(res.image.width() == 640);
}

TEST_CASE("rasterized extent matches project_box") {
  Rng rng(21);
  int checked = 0;
  for (int t = 0; t < 300 && checked < 60; ++t) {
    const Vec3 lo(rng.uniform(-1, 0), rng.uniform(-1, 0), rng.uniform(0, 0.5));
    const Vec3 hi = lo + Vec3(rng.uniform(0.3, 2), rng.uniform(0.3, 2), rng.uniform(0.3, 2));
    const SceneModel scene({box("only", lo, hi)});
    const double ang = rng.uniform(0, 6.283);
    const double dist = rng.uniform(4, 12);
    const Vec3 eye(dist * std::cos(ang), dist * std::sin(ang), rng.uniform(-1, 5));
    const auto cam = looking(eye, 0.5 * (lo + hi) + Vec3(rng.uniform(-0.3, 0.3), 0, 0), rng.uniform(20, 60));
    const auto sb = project_box(cam, scene.objects()[0].box);
    if (!sb.fully_inside) continue;
    ++checked;
    const Resolution res{320, 180};
    const Image img = rasterize(scene, cam, res);
    std::set<std::tuple<int, int, int>> colors;
    for (int axis = 0; axis < 3; ++axis)
      for (int sign : {-1, 1}) {
        const Rgb c = face_color("only", axis, sign);
        colors.insert({c.r, c.g, c.b});
      }
    int x0 = res.width, x1 = -1, y0 = res.height, y1 = -1;
    for (int y = 0; y < res.height; ++y)
      for (int x = 0; x < res.width; ++x) {
        const Rgb c = img.at(x, y);
        if (!colors.count({c.r, c.g, c.b})) continue;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    REQUIRE(x1 >= 0);
    CHECK(std::abs(x0 - sb.u_min * res.width) <= 2.0);
    CHECK(std::abs(x1 + 1 - sb.u_max * res.width) <= 2.0);
    CHECK(std::abs(y0 - sb.v_min * res.height) <= 2.0);
    CHECK(std::abs(y1 + 1 - sb.v_max * res.height) <= 2.0);
  }
  CHECK(checked >= 20);
}

TEST_CASE("png round trip") {
  fixtures::TempDir dir("png");
  Image img(7, 5, {10, 20, 30});
  img.at(3, 2) = {255, 0, 128};
  write_png(img, dir.path / "a.png");
  CHECK(read_png(dir.path / "a.png") == img);
  CHECK_THROWS(read_png(dir.path / "missing.png"));
}

TEST_CASE("render_parallel is order preserving and isolates failures") {
  const SceneModel scene = fixtures::plaza();
  std::vector<RenderRequest> reqs;
  for (int i = 0; i < 6; ++i) {
    RenderRequest r;
    r.resolution = {96, 54};
    r.camera = looking({6.0 * std::cos(i), 6.0 * std::sin(i), 1.5}, {0, 0, 0.5}, i == 3 ? 99.0 : 35.0);
    reqs.push_back(r);
  }
  FlakyBackend backend;
  const auto serial = render_parallel(backend, scene, reqs, 1);
  CHECK(backend.calls == 7);
  const auto parallel = render_parallel(backend, scene, reqs, 4);
  REQUIRE(serial.size() == 6);
  REQUIRE(parallel.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(serial[i].ok() == (i != 3));
    CHECK(parallel[i].ok() == (i != 3));
    if (i != 3) CHECK(serial[i].result->image == parallel[i].result->image);
  }
  CHECK(serial[3].failure == RenderFailureKind::backend_crash);
  CHECK(serial[3].attempts == 2);
  CHECK(serial[0].attempts == 1);
}

TEST_CASE("subprocess backend runs the CLI renderer") {
  fixtures::TempDir dir("subproc");
  const SceneModel scene = fixtures::plaza();
  save_scene(scene, dir.path / "scene.json");
  SubprocessBackend backend({CAMSEARCH_CLI, "render"}, dir.path / "scene.json");
  RenderRequest req;
  req.camera = looking({2, -7, 2}, {0, 0, 0.5}, 35, {3, 2});
  req.resolution = resolution_for(req.camera.aspect, RenderQuality::preview);
  req.out_path = dir.path / "out.png";
  const auto args = backend.arguments(req);
  REQUIRE(args.size() == 2 + 16);
  CHECK(args[2] == (dir.path / "scene.json").string());
  CHECK(args[11] == "3");
  CHECK(args[12] == "2");
  CHECK(args[14] == "640");
  CHECK(args[15] == "426");
  CHECK(args[16] == "64");

  const auto res = backend.render(scene, req);
  CHECK(res.image == BuiltinRenderer().render(scene, req).image);
  CHECK(res.stats.backend == "builtin");
  CHECK(res.stats.samples == 64);
}

TEST_CASE("subprocess failure mapping") {
  fixtures::TempDir dir("fail");
  const SceneModel scene = fixtures::plaza();
  RenderRequest req;
  req.camera = looking({2, -7, 2}, {0, 0, 0.5});
  req.resolution = {64, 36};
  req.out_path = dir.path / "out.png";
  auto kind_of = [&](const std::string& body, double timeout = 20.0) -> std::optional<RenderFailureKind> {
    static int n = 0;
    const auto script = write_script(dir.path, "r" + std::to_string(n++) + ".sh", body);
    SubprocessBackend backend({script.string()}, dir.path / "scene.json");
    RenderRequest r = req;
    r.timeout_s = timeout;
    try {
      backend.render(scene, r);
    } catch (const RenderFailure& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  CHECK(kind_of("exit 124") == RenderFailureKind::timeout_no_first_image);
  CHECK(kind_of("sleep 5", 0.3) == RenderFailureKind::timeout_no_first_image);
  CHECK(kind_of("exit 2") == RenderFailureKind::no_final_image);
  CHECK(kind_of("exit 0") == RenderFailureKind::no_final_image);
  CHECK(kind_of("echo junk > \"${16}\"") == RenderFailureKind::no_final_image);
  CHECK(kind_of("exit 7") == RenderFailureKind::backend_crash);
  CHECK(kind_of("kill -SEGV $$") == RenderFailureKind::backend_crash);
  SubprocessBackend missing({(dir.path / "no_such_renderer").string()}, dir.path / "scene.json");
  CHECK_THROWS_AS(missing.render(scene, req), RenderFailure);
}
