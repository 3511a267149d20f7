#pragma once

#include "camsearch/scene.hpp"

#include <filesystem>
#include <string>
#include <unistd.h>

namespace fixtures {

using camsearch::Box3d;
using camsearch::SceneModel;
using camsearch::SceneObject;
using camsearch::Vec3;

inline SceneObject box(const std::string& id, Vec3 lo, Vec3 hi, const std::string& label = "block") {
  return {id, label, Box3d(lo, hi), {}};
}

/// Hero cube at the origin on the ground plus two side blocks.
inline SceneModel plaza() {
  return SceneModel({box("hero", {-0.5, -0.5, 0}, {0.5, 0.5, 1}, "statue"),
                     box("left", {-4, 2, 0}, {-3, 3, 2}, "kiosk"),
                     box("right", {3, -3, 0}, {4.5, -2, 1.5}, "bench")});
}

inline SceneModel single_cube() { return SceneModel({box("cube", {-1, -1, -1}, {1, 1, 1})}); }

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("camsearch_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace fixtures
