// Preview/final rendering of box scenes and the external renderer contract.
#pragma once

#include "camsearch/camera.hpp"
#include "camsearch/image.hpp"
#include "camsearch/scene.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace camsearch {

inline constexpr int kPreviewSampleCap = 64;

enum class RenderQuality { preview, final };
std::string to_string(RenderQuality q);

struct RenderSettings {
  int preview_width = 640;
  int preview_samples = kPreviewSampleCap;
  int final_samples = 256;
  double preview_timeout_s = 300.0;
  double final_timeout_s = 3600.0;
};

struct Resolution {
  int width;
  int height;
  bool operator==(const Resolution&) const = default;
};

/// Preview width is fixed, final width is 4x; height = round(width / r), odd values drop by one.
Resolution resolution_for(const AspectRatio& ratio, RenderQuality quality, int preview_width = 640);

struct RenderRequest {
  CameraState camera;
  RenderQuality quality = RenderQuality::preview;
  Resolution resolution{640, 360};
  int sample_cap = kPreviewSampleCap;
  /// Written as PNG when non-empty.
  std::filesystem::path out_path;
  double timeout_s = 300.0;
};

/// Request with resolution, samples and timeout taken from the settings;
/// preview samples never exceed the cap.
RenderRequest make_request(const CameraState& camera, RenderQuality quality, const RenderSettings& settings,
                           std::filesystem::path out_path = {});

struct RenderStats {
  double render_time = 0.0;
  std::string backend;
  int samples = 0;
};

struct RenderResult {
  Image image;
  std::filesystem::path path;
  RenderStats stats;
  /// The camera sits inside an object; the image is still produced.
  bool inside_geometry = false;
};

enum class RenderFailureKind { timeout_no_first_image, no_final_image, backend_crash };
std::string to_string(RenderFailureKind k);

class RenderFailure : public std::runtime_error {
 public:
  RenderFailure(RenderFailureKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  RenderFailureKind kind() const { return kind_; }

 private:
  RenderFailureKind kind_;
};

class RenderBackend {
 public:
  virtual ~RenderBackend() = default;
  /// Throws RenderFailure; must be safe to call concurrently.
  virtual RenderResult render(const SceneModel& scene, const RenderRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Flat-shaded perspective rasterizer. Objects are drawn far to near using a
/// separating-axis order; faces are back-face culled and near-clipped.
class BuiltinRenderer final : public RenderBackend {
 public:
  RenderResult render(const SceneModel& scene, const RenderRequest& request) override;
  std::string name() const override { return "builtin"; }
};

/// Raster only, no file output.
Image rasterize(const SceneModel& scene, const CameraState& camera, Resolution resolution);
/// Object color for a face with outward normal on `axis` with `sign`.
Rgb face_color(const std::string& object_id, int axis, int sign);
Rgb background_color(const CameraFrame<double>& frame, double u, double v);

/// Runs an external program per request:
///   command... scene px py pz lx ly lz f d r_num r_den r_value width height samples out_path
/// Exit 0 with a readable PNG is success. Exit code 124 or the watchdog maps to
/// timeout_no_first_image, exit 0 or 2 without an image to no_final_image,
/// anything else to backend_crash. Stats come from `<out_path>.stats` when present.
class SubprocessBackend final : public RenderBackend {
 public:
  SubprocessBackend(std::vector<std::string> command, std::filesystem::path scene_path);
  RenderResult render(const SceneModel& scene, const RenderRequest& request) override;
  std::string name() const override { return "subprocess"; }

  std::vector<std::string> arguments(const RenderRequest& request) const;

 private:
  std::vector<std::string> command_;
  std::filesystem::path scene_path_;
};

struct RenderOutcome {
  std::optional<RenderResult> result;
  std::optional<RenderFailureKind> failure;
  std::string message;
  int attempts = 0;

  bool ok() const { return result.has_value(); }
};

/// Renders every request, retrying a failed one once. Output order matches
/// `requests` regardless of `workers`; failures stay per request.
std::vector<RenderOutcome> render_parallel(RenderBackend& backend, const SceneModel& scene,
                                           const std::vector<RenderRequest>& requests, int workers,
                                           int max_attempts = 2);

}  // namespace camsearch
