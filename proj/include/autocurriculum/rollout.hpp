#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autocurriculum/episode.hpp"
#include "autocurriculum/learner.hpp"
#include "autocurriculum/reward.hpp"
#include "autocurriculum/skills.hpp"

namespace autocurriculum {

/// Closed-loop controller for "stack x on y": open, go to x, grasp, rise to
/// travel height, carry over y, lower onto it, release, back off.
Action expert_stack_action(const WorldState& state, Color x, Color y);

struct PretrainConfig {
  int episodes = 600;
  int episode_steps = 60;
  double epsilon = 0.2;
  std::uint64_t seed = 0;

  void check() const;
};

/// Scripted single-stack episodes cycling over the six ordered pairs, with
/// epsilon-random actions mixed in, relabeled with every library skill.
std::vector<Episode> generate_pretraining_data(const PretrainConfig& config,
                                               const SkillLibrary& library,
                                               const RewardParams& params = {});

/// Runs each caption open-loop for `segment_steps` steps from `start`,
/// recording one segment per caption. Channels cover `library`.
Episode execute_plan(const Policy& policy, const std::vector<std::string>& captions,
                     const WorldState& start, int segment_steps, double epsilon, Rng& rng,
                     const SkillLibrary& library, const RewardParams& params = {});

}  // namespace autocurriculum
