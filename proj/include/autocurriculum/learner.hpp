#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "autocurriculum/abstraction.hpp"
#include "autocurriculum/curve.hpp"
#include "autocurriculum/episode.hpp"
#include "autocurriculum/random.hpp"
#include "autocurriculum/reward.hpp"
#include "autocurriculum/skills.hpp"

namespace autocurriculum {

// ---- generic tabular core -------------------------------------------------

/// One logged transition of a finite MDP. `weight` scales its share in the
/// average backup of (state, action).
struct Transition {
  std::uint32_t state = 0;
  std::uint8_t action = 0;
  double reward = 0;
  std::uint32_t next_state = 0;
  double weight = 1.0;
};

struct TabularData {
  std::size_t n_states = 0;
  int n_actions = 0;
  std::vector<Transition> transitions;
};

/// Row-major Q[state * n_actions + action]; (state, action) pairs without
/// data stay at zero.
using QTable = std::vector<double>;

/// One synchronous sweep: every covered (s, a) becomes the weighted mean of
/// r + discount * max_a' Q(s', a') over its transitions, all computed from
/// the incoming table.
void fitted_q_sweep(const TabularData& data, double discount, QTable& q);

/// `sweeps` sweeps starting from zero.
QTable fitted_q(const TabularData& data, double discount, int sweeps);

// ---- skill-conditioned policy ---------------------------------------------

using QRow = std::array<double, kNumActions>;

/// Per-caption action-value tables over abstracted states. Unseen states read
/// as all-zero rows, so the greedy action falls back to the first action.
class Policy {
 public:
  Policy() = default;
  explicit Policy(AbstractionConfig abstraction) : abstraction_(abstraction) {}

  const AbstractionConfig& abstraction() const { return abstraction_; }
  std::vector<std::string> captions() const;
  bool has(std::string_view caption) const { return find(caption) != nullptr; }
  const RewardId& reward_id(std::string_view caption) const;
  std::size_t table_size(std::string_view caption) const;

  /// Creates or replaces the table for a skill.
  void set_table(const std::string& caption, const RewardId& id,
                 std::unordered_map<std::uint64_t, QRow> rows);
  QRow values(std::string_view caption, const WorldState& state) const;
  Action greedy(std::string_view caption, const WorldState& state) const;
  /// Copies one skill's table from a policy with the same abstraction.
  void adopt(const Policy& other, std::string_view caption);

  bool operator==(const Policy&) const;

  /// JSON header line followed by raw little-endian rows.
  void save(const std::filesystem::path& path) const;
  static Policy load(const std::filesystem::path& path);

 private:
  struct Table {
    std::string caption;
    RewardId reward_id;
    std::unordered_map<std::uint64_t, QRow> rows;
  };
  const Table* find(std::string_view caption) const;
  const Table& at(std::string_view caption) const;

  AbstractionConfig abstraction_;
  std::vector<Table> tables_;
};

Action greedy_action(const QRow& row);

/// Greedy with probability 1 - epsilon, otherwise uniform over all actions.
/// Throws UnknownSkillError for captions the policy was not trained on.
Action act(const Policy& policy, const WorldState& state, std::string_view caption,
           double epsilon, Rng& rng);

// ---- training -------------------------------------------------------------

struct TrainConfig {
  double discount = 0.98;
  int iterations = 60;     // fitted-Q sweeps per skill
  int eval_interval = 2;   // sweeps between evaluation points
  /// Update count credited to one sweep on the curves' x-axis.
  std::uint64_t updates_per_sweep = 10000;
  int eval_episodes = 5;
  double epsilon = 0.1;    // exploration during collection
  std::uint64_t seed = 0;
  int segment_steps = 50;
  int eval_max_steps = 400;
  bool augment_symmetries = true;  // also learn from the floor-symmetric images
  AbstractionConfig abstraction;
  RewardParams rewards;

  void check() const;
};

/// Episodes plus optional per-step weights (empty means weight 1).
struct WeightedEpisodes {
  std::vector<const Episode*> episodes;
  std::vector<std::vector<double>> step_weights;
};

struct FitHooks {
  /// Called after each evaluation point; returning true stops that skill's
  /// training and freezes its table.
  std::function<bool(const LearningCurve&)> stop;
  /// Progress report: caption and sweeps done.
  std::function<void(const std::string&, int)> progress;
};

struct FitResult {
  Policy policy;
  std::vector<LearningCurve> curves;  // library order
};

/// Offline fitted Q-iteration per library skill over the logged transitions,
/// using each episode's reward channel for that skill. Never touches the
/// simulator except for the evaluation rollouts that produce the curves.
/// Throws DataError naming the skill when an episode lacks its channel.
FitResult fit(const WeightedEpisodes& data, const SkillLibrary& library, const TrainConfig& config,
              const FitHooks& hooks = {});

using RewardFn = std::function<double(const WorldState&)>;

/// Mean undiscounted return of greedy rollouts from reset states, each
/// capped at `max_steps`; reward is read on the state after every action.
double evaluate(const Policy& policy, std::string_view caption, int episodes, std::uint64_t seed,
                const RewardFn& reward_fn, int max_steps = 400);
double evaluate(const Policy& policy, std::string_view caption, int episodes, std::uint64_t seed,
                const RewardParams& params = {}, int max_steps = 400);

/// Reset seed of evaluation episode `index`; shared by every skill.
std::uint64_t eval_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace autocurriculum
