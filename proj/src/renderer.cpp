#include "camsearch/renderer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace camsearch {

std::string to_string(RenderQuality q) { return q == RenderQuality::preview ? "preview" : "final"; }

std::string to_string(RenderFailureKind k) {
  switch (k) {
    case RenderFailureKind::timeout_no_first_image: return "timeout_no_first_image";
    case RenderFailureKind::no_final_image: return "no_final_image";
    case RenderFailureKind::backend_crash: return "backend_crash";
  }
  return "backend_crash";
}

Resolution resolution_for(const AspectRatio& ratio, RenderQuality quality, int preview_width) {
  if (preview_width < 2 || ratio.width <= 0 || ratio.height <= 0) throw std::invalid_argument("bad resolution input");
  const int w = quality == RenderQuality::final ? 4 * preview_width : preview_width;
  int h = static_cast<int>(std::lround(w / ratio.value()));
  if (h % 2) --h;
  return {w, std::max(h, 2)};
}

RenderRequest make_request(const CameraState& camera, RenderQuality quality, const RenderSettings& settings,
                           std::filesystem::path out_path) {
  RenderRequest r;
  r.camera = camera;
  r.quality = quality;
  r.resolution = resolution_for(camera.aspect, quality, settings.preview_width);
  r.sample_cap = quality == RenderQuality::preview ? std::min(settings.preview_samples, kPreviewSampleCap)
                                                   : settings.final_samples;
  r.timeout_s = quality == RenderQuality::preview ? settings.preview_timeout_s : settings.final_timeout_s;
  r.out_path = std::move(out_path);
  return r;
}

// ---------------------------------------------------------------------------
// Rasterizer

namespace {

std::uint32_t fnv1a(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

Rgb hsv(double hue, double s, double v) {
  const double c = v * s;
  const double hp = hue * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const double m = v - c;
  auto q = [](double t) { return static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0)); };
  return {q(r + m), q(g + m), q(b + m)};
}

Rgb lerp(Rgb a, Rgb b, double t) {
  auto mix = [t](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(std::lround(x + (double(y) - x) * std::clamp(t, 0.0, 1.0)));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Object indices, far to near. Pairs with a separating plane get an explicit
// constraint; the rest fall back to centroid distance.
std::vector<int> draw_order(const SceneModel& scene, const Vec3& eye) {
  const auto& objs = scene.objects();
  const int n = static_cast<int>(objs.size());
  std::vector<std::vector<int>> preds(n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const Box3d& A = objs[a].box;
      const Box3d& B = objs[b].box;
      for (int ax = 0; ax < 3; ++ax) {
        int lo = -1, hi = -1;
        if (A.max()[ax] <= B.min()[ax]) lo = a, hi = b;
        else if (B.max()[ax] <= A.min()[ax]) lo = b, hi = a;
        if (lo < 0) continue;
        const double plane_lo = objs[lo].box.max()[ax];
        const double plane_hi = objs[hi].box.min()[ax];
        if (eye[ax] >= plane_hi) preds[hi].push_back(lo);
        else if (eye[ax] <= plane_lo) preds[lo].push_back(hi);
        break;
      }
    }
  std::vector<double> dist(n);
  for (int i = 0; i < n; ++i) dist[i] = (objs[i].center() - eye).norm();
  std::vector<bool> drawn(n, false);
  std::vector<int> order;
  order.reserve(n);
  while (static_cast<int>(order.size()) < n) {
    int pick = -1, fallback = -1;
    for (int i = 0; i < n; ++i) {
      if (drawn[i]) continue;
      if (fallback < 0 || dist[i] > dist[fallback]) fallback = i;
      const bool ready = std::all_of(preds[i].begin(), preds[i].end(), [&](int p) { return drawn[p]; });
      if (ready && (pick < 0 || dist[i] > dist[pick])) pick = i;
    }
    if (pick < 0) pick = fallback;
    drawn[pick] = true;
    order.push_back(pick);
  }
  return order;
}

void fill_convex(Image& img, const std::vector<Vec2>& poly, Rgb color) {
  if (poly.size() < 3) return;
  double area = 0.0;
  double x0 = poly[0].x(), x1 = x0, y0 = poly[0].y(), y1 = y0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    area += p.x() * q.y() - q.x() * p.y();
    x0 = std::min(x0, p.x()), x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y()), y1 = std::max(y1, p.y());
  }
  if (std::abs(area) < 1e-12) return;
  const double sign = area > 0 ? 1.0 : -1.0;
  const int xa = std::max(0, static_cast<int>(std::floor(std::max(x0, -1.0))));
  const int xb = std::min(img.width() - 1, static_cast<int>(std::ceil(std::min(x1, double(img.width())))));
  const int ya = std::max(0, static_cast<int>(std::floor(std::max(y0, -1.0))));
  const int yb = std::min(img.height() - 1, static_cast<int>(std::ceil(std::min(y1, double(img.height())))));
  for (int y = ya; y <= yb; ++y) {
    const double cy = y + 0.5;
    for (int x = xa; x <= xb; ++x) {
      const double cx = x + 0.5;
      bool inside = true;
      for (std::size_t i = 0; i < poly.size() && inside; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        inside = sign * ((q.x() - p.x()) * (cy - p.y()) - (q.y() - p.y()) * (cx - p.x())) >= 0.0;
      }
      if (inside) img.at(x, y) = color;
    }
  }
}

}  // namespace

Rgb face_color(const std::string& object_id, int axis, int sign) {
  const std::uint32_t h = fnv1a(object_id);
  const double hue = (h & 0xffff) / 65536.0;
  const double sat = 0.45 + 0.35 * ((h >> 16) & 0xff) / 255.0;
  static constexpr double shade[3][2] = {{0.62, 0.78}, {0.70, 0.86}, {0.45, 0.97}};
  return hsv(hue, sat, shade[axis][sign > 0 ? 1 : 0]);
}

Rgb background_color(const CameraFrame<double>& frame, double u, double v) {
  const double z = frame.ray_direction(u, v).z();
  if (z >= 0.0) return lerp(Rgb{206, 214, 222}, Rgb{92, 138, 196}, std::sqrt(z));
  return lerp(Rgb{158, 148, 132}, Rgb{84, 76, 66}, std::sqrt(-z));
}

Image rasterize(const SceneModel& scene, const CameraState& camera, Resolution res) {
  if (res.width < 1 || res.height < 1) throw std::invalid_argument("render resolution must be positive");
  const auto frame = camera_frame(camera);
  Image img(res.width, res.height);
  for (int y = 0; y < res.height; ++y)
    for (int x = 0; x < res.width; ++x)
      img.at(x, y) = background_color(frame, (x + 0.5) / res.width, (y + 0.5) / res.height);

  const Vec3& eye = camera.position;
  for (int idx : draw_order(scene, eye)) {
    const SceneObject& obj = scene.objects()[idx];
    const auto corners = box_corners(obj.box);
    std::array<Vec3, 8> cam_pts;
    for (int i = 0; i < 8; ++i) cam_pts[i] = frame.to_camera(corners[i]);
    for (const auto& face : kBoxFaces) {
      const double plane = face.sign > 0 ? obj.box.max()[face.axis] : obj.box.min()[face.axis];
      if (face.sign * (eye[face.axis] - plane) <= 0.0) continue;
      // Sutherland-Hodgman against the near plane
      std::vector<Vec3> clipped;
      for (int i = 0; i < 4; ++i) {
        const Vec3& a = cam_pts[face.corners[i]];
        const Vec3& b = cam_pts[face.corners[(i + 1) % 4]];
        const bool ina = a.z() > kNearDepth, inb = b.z() > kNearDepth;
        if (ina) clipped.push_back(a);
        if (ina != inb) {
          const double t = (kNearDepth - a.z()) / (b.z() - a.z());
          Vec3 hit = a + t * (b - a);
          hit.z() = kNearDepth * (1.0 + 1e-9);
          clipped.push_back(hit);
        }
      }
      if (clipped.size() < 3) continue;
      std::vector<Vec2> poly;
      poly.reserve(clipped.size());
      for (const auto& p : clipped) {
        const Vec2 uv = frame.to_screen(p);
        poly.emplace_back(uv.x() * res.width, uv.y() * res.height);
      }
      fill_convex(img, poly, face_color(obj.id, face.axis, face.sign));
    }
  }
  return img;
}

RenderResult BuiltinRenderer::render(const SceneModel& scene, const RenderRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  RenderResult out;
  out.inside_geometry = scene.inside_any(request.camera.position);
  out.image = rasterize(scene, request.camera, request.resolution);
  if (!request.out_path.empty()) {
    write_png(out.image, request.out_path);
    out.path = request.out_path;
  }
  out.stats.backend = name();
  out.stats.samples = request.sample_cap;
  out.stats.render_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<RenderOutcome> render_parallel(RenderBackend& backend, const SceneModel& scene,
                                           const std::vector<RenderRequest>& requests, int workers,
                                           int max_attempts) {
  if (workers < 1) throw std::invalid_argument("render_parallel needs at least one worker");
  std::vector<RenderOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      RenderOutcome& o = outcomes[i];
      while (o.attempts < max_attempts && !o.result) {
        ++o.attempts;
        try {
          o.result = backend.render(scene, requests[i]);
          o.failure.reset();
          o.message.clear();
        } catch (const RenderFailure& e) {
          o.failure = e.kind();
          o.message = e.what();
        } catch (const std::exception& e) {
          o.failure = RenderFailureKind::backend_crash;
          o.message = e.what();
        }
      }
    }
  };
  const int n = std::min<int>(workers, static_cast<int>(requests.size()));
  if (n <= 1) {
    work();
    return outcomes;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < n; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return outcomes;
}

}  // namespace camsearch
