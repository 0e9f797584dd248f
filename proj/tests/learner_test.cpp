#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>

#include "autocurriculum/abstraction.hpp"
#include "autocurriculum/errors.hpp"
#include "autocurriculum/learner.hpp"
#include "autocurriculum/rollout.hpp"
#include "oracle_mdps.hpp"

using namespace autocurriculum;
using namespace autocurriculum::oracle;

namespace {

Policy one_row_policy(const WorldState& s, const QRow& row) {
  Policy p;
  RewardId id{RewardFamily::Reach, {Color::Red, Color::Red, Color::Red}};
  p.set_table("reach red", id, {{abstract_key(s, id, p.abstraction(), 0), row}});
  return p;
}

std::vector<Episode> small_pretraining(int episodes, const SkillLibrary& lib) {
  PretrainConfig cfg;
  cfg.episodes = episodes;
  cfg.episode_steps = 60;
  cfg.seed = 3;
  return generate_pretraining_data(cfg, lib);
}

}  // namespace

TEST_CASE("fitted Q matches value iteration on a two-state MDP") {
  CHECK(max_gap(fitted_q(two_state(), 0.9, 600), kTwoStateQ) < 1e-6);
}

TEST_CASE("fitted Q matches value iteration on a five-state MDP") {
  CHECK(max_gap(fitted_q(five_state(), 0.95, 1000), kFiveStateQ) < 1e-6);
  CHECK(max_gap(fitted_q(five_state(), 0.95, 20), kFiveStateQ) > 1.0);
}

TEST_CASE("compiled sweeps agree with the reference sweep") {
  for (const TabularData& d : {two_state(), five_state()}) {
    QTable ref(d.n_states * static_cast<std::size_t>(d.n_actions), 0.0);
    for (int k = 1; k <= 40; ++k) {
      fitted_q_sweep(d, 0.9, ref);
      QTable fast = fitted_q(d, 0.9, k);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(fast[i] - ref[i]) < 1e-12);
    }
  }
}

TEST_CASE("duplicated transitions act as weights; uncovered pairs stay zero") {
  TabularData weighted = model(3, 2, {{0, 0, 2, 1, 1}, {0, 0, 1, 0, 2}});
  TabularData repeated = model(3, 2, {{0, 0, 1, 1, 1}, {0, 0, 1, 1, 1}, {0, 0, 1, 0, 2}});
  QTable a = fitted_q(weighted, 0.5, 5), b = fitted_q(repeated, 0.5, 5);
  CHECK(a[0] == doctest::Approx(2.0 / 3));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]));
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] == 0.0);
}

TEST_CASE("greedy picks the first maximum") {
  QRow row{};
  CHECK(greedy_action(row) == Action::MoveXPos);
  row[3] = 1;
  row[5] = 1;
  CHECK(greedy_action(row) == Action::MoveYNeg);
}

TEST_CASE("epsilon-greedy action frequencies pass a chi-square test") {
  WorldState s = reset(1);
  QRow row{};
  row[6] = 5;
  Policy p = one_row_policy(s, row);
  REQUIRE(p.greedy("reach red", s) == Action::Open);

  const double eps = 0.3;
  const int n = 80000;
  Rng rng(17);
  std::array<int, kNumActions> counts{};
  for (int i = 0; i < n; ++i) ++counts[static_cast<int>(act(p, s, "reach red", eps, rng))];
  double chi2 = 0;
  for (int a = 0; a < kNumActions; ++a) {
    double expected = n * (eps / kNumActions + (a == 6 ? 1 - eps : 0));
    chi2 += (counts[a] - expected) * (counts[a] - expected) / expected;
  }
  CHECK(chi2 < 24.32);  // 7 degrees of freedom, p = 0.001

  Rng r2(1);
  CHECK_THROWS_AS(act(p, s, "lift red", 0.0, r2), UnknownSkillError);
  CHECK(act(p, s, "reach red", 0.0, r2) == Action::Open);
}

TEST_CASE("unseen fine keys fall back to coarser levels") {
  WorldState s = reset(5);
  RewardId id{RewardFamily::Reach, {Color::Blue, Color::Red, Color::Red}};
  Policy p;
  QRow row{};
  row[2] = 1;
  p.set_table("reach blue", id, {{abstract_key(s, id, p.abstraction(), 1), row}});
  CHECK(p.values("reach blue", s) == row);
  for (int a = 0; a + 1 < p.abstraction().levels(); ++a)
    CHECK(abstract_key(s, id, p.abstraction(), a) != abstract_key(s, id, p.abstraction(), a + 1));
}

TEST_CASE("floor symmetries commute with the dynamics and keep rewards") {
  SkillLibrary lib = base_library();
  for (auto& c : composite_skills()) lib.add_skill(c);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    WorldState s = reset(seed);
    for (int t = 0; t < 100; ++t) {
      auto a = static_cast<Action>(uniform_index(rng, kNumActions));
      for (int g = 0; g < kSymmetries; ++g) {
        REQUIRE(step(mirrored(s, g), mirrored(a, g)) == mirrored(step(s, a), g));
        for (const auto& skill : lib.all())
          REQUIRE(std::abs(reward(skill.reward_id, mirrored(s, g)) - reward(skill.reward_id, s)) <
                  1e-12);
      }
      s = step(s, a);
    }
  }
}

TEST_CASE("policies round-trip through checkpoints") {
  WorldState s = reset(2);
  QRow row{};
  row[1] = 0.25;
  row[7] = -3;
  Policy p = one_row_policy(s, row);
  Policy other = one_row_policy(reset(3), row);
  RewardId lift{RewardFamily::Lift, {Color::Green, Color::Red, Color::Red}};
  p.set_table("lift green", lift, {{42, row}, {7, QRow{}}});
  auto path = std::filesystem::temp_directory_path() / "ac_policy_test.policy";
  p.save(path);
  Policy back = Policy::load(path);
  CHECK(back == p);
  CHECK(back.captions() == std::vector<std::string>{"reach red", "lift green"});
  CHECK(back.table_size("lift green") == 2);

  back.adopt(other, "reach red");
  CHECK_FALSE(back == p);
  CHECK(back.values("reach red", reset(3)) == row);

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 10);
  CHECK_THROWS_AS(Policy::load(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("fit is deterministic and improves on an untrained table") {
  SkillLibrary lib = base_library().restricted_to({"reach red", "lift blue"});
  auto episodes = small_pretraining(120, lib);
  WeightedEpisodes data;
  for (const auto& e : episodes) data.episodes.push_back(&e);
  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.eval_interval = 10;
  cfg.eval_episodes = 3;

  FitResult a = fit(data, lib, cfg);
  FitResult b = fit(data, lib, cfg);
  CHECK(a.policy == b.policy);
  CHECK(a.curves == b.curves);
  REQUIRE(a.curves.size() == 2);
  for (const auto& c : a.curves) {
    CHECK_FALSE(c.check().has_value());
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0].update_count == 100000);
    CHECK(c.points[1].update_count == 200000);
  }

  Policy blank;
  blank.set_table("reach red", lib.at("reach red").reward_id, {});
  double untrained = evaluate(blank, "reach red", 3, 0);
  double trained = evaluate(a.policy, "reach red", 3, 0);
  CHECK(trained > untrained + 50);
  CHECK(a.curves[0].points.back().value == doctest::Approx(evaluate(a.policy, "reach red", 3, 0)));
}

TEST_CASE("a stop hook freezes a skill early") {
  SkillLibrary lib = base_library().restricted_to({"open gripper"});
  auto episodes = small_pretraining(30, lib);
  WeightedEpisodes data;
  for (const auto& e : episodes) data.episodes.push_back(&e);
  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.eval_interval = 2;
  cfg.eval_episodes = 1;
  FitHooks hooks;
  hooks.stop = [](const LearningCurve& c) { return c.points.size() >= 3; };
  FitResult r = fit(data, lib, cfg, hooks);
  CHECK(r.curves[0].points.size() == 3);
}

TEST_CASE("fit rejects episodes without the skill's channel") {
  SkillLibrary lib = base_library().restricted_to({"reach red"});
  auto episodes = small_pretraining(2, lib);
  episodes[1].channels.clear();
  WeightedEpisodes data;
  for (const auto& e : episodes) data.episodes.push_back(&e);
  CHECK_THROWS_AS(fit(data, lib, TrainConfig{}), DataError);
}

TEST_CASE("training configuration checks") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.check());
  cfg.discount = 1.0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = {};
  cfg.eval_max_steps = 300;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = {};
  cfg.abstraction.xy_clamps = {};
  CHECK_THROWS_AS(cfg.check(), ConfigError);
}
