#pragma once

#include <cstdint>
#include <vector>

#include "autocurriculum/reward.hpp"
#include "autocurriculum/world.hpp"

namespace autocurriculum {

/// How much of the world a skill's value table sees. Horizontal offsets from
/// the gripper to each named object are clamped to +-xy_clamps[level]; the
/// levels go from fine to coarse, and lookups fall back to a coarser level
/// when the finer key was never logged.
struct AbstractionConfig {
  std::vector<int> xy_clamps{7, 2, 1};
  int z_clamp = 1;
  bool lift_height = true;  // lift skills also see the object's own level

  int levels() const { return static_cast<int>(xy_clamps.size()); }
  bool operator==(const AbstractionConfig&) const = default;
  void check() const;
};

/// Packs the skill-relevant view of `state` into a 64-bit key:
///   per named object: clamped gripper offset (x, y, z) and a covered bit;
///   which named object is held (or another, or none); aperture step;
///   for two or more named objects, which rests directly on which.
/// Gripper-only skills see just aperture and held state; "grasp anything"
/// treats the nearest graspable object as its named object. Keys of
/// different levels never collide.
std::uint64_t abstract_key(const WorldState& state, const RewardId& skill,
                           const AbstractionConfig& config = {}, int level = 0);

/// The eight symmetries of the square floor: bit 2 swaps x and y, then bits
/// 0 and 1 mirror x and y. Keys only see gripper-relative offsets, so a
/// logged transition and its images are equally valid evidence.
inline constexpr int kSymmetries = 8;
WorldState mirrored(const WorldState& state, int g);
Action mirrored(Action action, int g);

}  // namespace autocurriculum
