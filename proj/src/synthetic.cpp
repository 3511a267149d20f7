#include "camsearch/synthetic.hpp"

#include "camsearch/random.hpp"

#include <array>
#include <cmath>
#include <cstdio>

namespace camsearch {

namespace {

constexpr std::array<const char*, 8> kLabels{"bench", "kiosk", "planter", "crate", "lamp post", "wall", "car", "shed"};
constexpr std::array<const char*, 6> kHeroLabels{"statue", "fountain", "sculpture", "monument", "sports car", "pavilion"};

struct Layout {
  std::vector<SceneObject> objects;

  bool free(const Box3d& b, double gap) const {
    for (const auto& o : objects) {
      const Box3d grown(o.box.min() - Vec3(gap, gap, 0), o.box.max() + Vec3(gap, gap, 0));
      if (overlaps(grown, b)) return false;
    }
    return true;
  }

  void place(Rng& rng, const std::string& id, const std::string& label, Vec3 size, double spread_x, double spread_y,
             double z0 = 0.0) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const Vec3 c(rng.uniform(-spread_x, spread_x), rng.uniform(-spread_y, spread_y), z0 + 0.5 * size.z());
      const Box3d b(c - 0.5 * size, c + 0.5 * size);
      if (free(b, 0.4)) {
        objects.push_back({id, label, b, {}});
        return;
      }
    }
  }
};

std::string phrase(const std::optional<PlacementPref>& p) {
  if (!p) return "anywhere in the frame";
  const std::string s = p->to_string();
  if (s == "center") return "in the center of the frame";
  if (p->thirds) return "on the " + (s.size() > 7 ? s.substr(7) + " " : std::string()) + "thirds line";
  return "in the " + s + " half of the frame";
}

}  // namespace

std::vector<SuiteEntry> synthetic_suite(int count, std::uint64_t seed) {
  static const std::array<std::optional<PlacementPref>, 6> placements{
      PlacementPref::parse("thirds_left"), PlacementPref::parse("thirds_right"), PlacementPref::parse("left"),
      PlacementPref::parse("right"),       PlacementPref::parse("center"),       std::nullopt};
  static const std::array<std::vector<AspectRatio>, 4> aspect_sets{
      std::vector<AspectRatio>{{16, 9}, {1, 1}}, std::vector<AspectRatio>{{3, 2}, {2, 3}, {1, 1}},
      std::vector<AspectRatio>{{16, 9}}, std::vector<AspectRatio>{{4, 3}, {16, 9}, {9, 16}}};
  static const std::array<const char*, 4> vibes{"calm morning light", "a wide sweeping panorama",
                                                "dramatic and towering", "quiet and intimate"};

  std::vector<SuiteEntry> suite;
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const int layout = i % 4;
    Layout L;
    const std::string hero_label = kHeroLabels[rng.index(kHeroLabels.size())];
    const Vec3 hero_size(rng.uniform(0.8, 2.0), rng.uniform(0.8, 2.0), rng.uniform(0.8, 2.5));
    L.place(rng, "hero", hero_label, hero_size, 1.5, 1.5);

    const double sx = layout == 1 ? 12.0 : 6.0;
    const double sy = layout == 1 ? 3.0 : 6.0;
    const int extras = 3 + static_cast<int>(rng.index(5));
    for (int k = 0; k < extras; ++k) {
      const Vec3 size(rng.uniform(0.4, 3.0), rng.uniform(0.4, 3.0), rng.uniform(0.3, 4.0));
      L.place(rng, "obj" + std::to_string(k), kLabels[rng.index(kLabels.size())], size, sx, sy);
    }
    if (layout == 2)
      L.place(rng, "tower", "tower", Vec3(1.6, 1.6, rng.uniform(11.0, 15.0)), 4.0, 4.0);
    if (layout == 3)
      for (int level = 0; level < 3; ++level)
        L.place(rng, "terrace" + std::to_string(level), "terrace", Vec3(rng.uniform(2, 4), rng.uniform(2, 4), 0.4), 6.0,
                6.0, 1.8 + 2.2 * level);

    SuiteEntry e{SceneModel(L.objects), {}};
    MissionSpec& m = e.mission;
    char id[32];
    std::snprintf(id, sizeof id, "syn%02d", i);
    m.mission_id = id;
    m.category = static_cast<MissionCategory>(i % 3);
    m.scene_ref = "scenes/" + m.mission_id + ".json";
    m.aspect_set = aspect_sets[rng.index(aspect_sets.size())];
    m.eval_spec.primary_subject = "hero";
    m.eval_spec.placement_pref = placements[rng.index(placements.size())];
    m.eval_spec.scale_pref = static_cast<ScalePref>(rng.index(3));
    m.eval_spec.angle_pref = static_cast<AnglePref>(rng.index(3));
    const std::string vibe = vibes[rng.index(vibes.size())];
    m.instruction = "Photograph the " + hero_label + " " + phrase(m.eval_spec.placement_pref) + " as a " +
                    to_string(*m.eval_spec.scale_pref) + " subject from a " + to_string(*m.eval_spec.angle_pref) +
                    " viewpoint; " + vibe + ".";
    suite.push_back(std::move(e));
  }
  return suite;
}

}  // namespace camsearch
