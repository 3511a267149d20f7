// Seeded box scenes and missions for end-to-end checks and benchmarks.
#pragma once

#include "camsearch/blueprint.hpp"
#include "camsearch/scene.hpp"

#include <cstdint>
#include <vector>

namespace camsearch {

struct SuiteEntry {
  SceneModel scene;
  MissionSpec mission;
};

/// `count` missions cycling through plaza, street, tower and terrace layouts
/// and the three mission categories. Scene refs are "scenes/<mission_id>.json".
std::vector<SuiteEntry> synthetic_suite(int count = 20, std::uint64_t seed = 2024);

}  // namespace camsearch
