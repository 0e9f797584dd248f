#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "autocurriculum/episode.hpp"
#include "autocurriculum/world.hpp"

namespace autocurriculum {

class SkillLibrary;

enum class RewardFamily : std::uint8_t {
  OpenGripper,
  CloseGripper,
  GraspAnything,
  Reach,
  Above,
  Lift,
  Place,
  Stack,
  TripleStack,
  Pyramid,
  InversePyramid,
};

/// Number of color placeholders a family binds (X, X_Y or X_Y_Z).
int arity(RewardFamily f);
bool is_composite(RewardFamily f);

/// A reward family plus its color bindings, e.g. "stack_red_green".
struct RewardId {
  RewardFamily family = RewardFamily::OpenGripper;
  std::array<Color, 3> colors{Color::Red, Color::Red, Color::Red};

  /// Colors beyond the family's arity are ignored.
  bool operator==(const RewardId& o) const;

  std::string to_string() const;
  /// Throws UnknownSkillError when the text is not a known family/binding.
  static RewardId parse(std::string_view text);
};

struct RewardParams {
  double reach_scale = 0.10;
  double above_offset = 0.10;
  double place_offset = 0.04;
  double lift_low = 0.05;
  double lift_high = 0.10;

  void check() const;
};

double reward(const RewardId& id, const WorldState& state, const RewardParams& params = {});

/// Adds one channel per library skill that the episode does not carry yet.
/// Existing channels are left untouched, so the operation is idempotent.
Episode relabel(Episode episode, const SkillLibrary& library, const RewardParams& params = {});

struct SuccessCriteria {
  double per_skill_threshold = 0.5;
  double final_skill_threshold = 0.95;

  void check() const;
};

struct JudgeResult {
  bool success = false;
  std::vector<double> segment_finals;
};

/// Success iff every segment-final reward exceeds the per-skill threshold and
/// the last one exceeds the final threshold. Throws DataError when the
/// episode's segments do not match `plan_captions`.
JudgeResult judge_success(const Episode& episode, const std::vector<std::string>& plan_captions,
                          const SuccessCriteria& criteria = {});

/// Threshold rule on its own, for callers that already hold the finals.
bool meets_thresholds(const std::vector<double>& segment_finals, const SuccessCriteria& criteria);

}  // namespace autocurriculum
