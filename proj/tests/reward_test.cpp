#include <doctest.h>

#include <cmath>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/random.hpp"
#include "autocurriculum/reward.hpp"
#include "autocurriculum/skills.hpp"

using namespace autocurriculum;

namespace {

RewardId id(RewardFamily f, Color x = Color::Red, Color y = Color::Red, Color z = Color::Red) {
  return {f, {x, y, z}};
}

WorldState scene() {
  WorldState s;
  s.objects = {Cell{1, 1, 0}, Cell{4, 4, 0}, Cell{6, 2, 0}};
  s.tcp = Cell{0, 7, 4};
  return s;
}

WorldState wander(std::uint64_t seed) {
  Rng rng(seed);
  WorldState s = reset(seed);
  int n = static_cast<int>(uniform_index(rng, 400));
  for (int i = 0; i < n; ++i) s = step(s, static_cast<Action>(uniform_index(rng, kNumActions)));
  return s;
}

double stack_r(const WorldState& s, Color x, Color y) {
  return reward(id(RewardFamily::Stack, x, y), s);
}

}  // namespace

TEST_CASE("reach is one at zero distance and decays with tanh") {
  WorldState s = scene();
  s.tcp = s.object(Color::Green);
  CHECK(reward(id(RewardFamily::Reach, Color::Green), s) == doctest::Approx(1.0).epsilon(1e-12));
  s.tcp.x += 2;
  CHECK(reward(id(RewardFamily::Reach, Color::Green), s) ==
        doctest::Approx(1.0 - std::tanh(0.10 / 0.10)).epsilon(1e-12));
}

TEST_CASE("above peaks one offset over the object") {
  WorldState s = scene();
  s.tcp = s.object(Color::Blue);
  CHECK(reward(id(RewardFamily::Above, Color::Blue), s) < 1.0);
  s.tcp.z = 2;  // 0.08 m
  CHECK(reward(id(RewardFamily::Above, Color::Blue), s) ==
        doctest::Approx(1.0 - std::tanh(0.02 / 0.10)).epsilon(1e-12));
}

TEST_CASE("lift anchors") {
  WorldState s = scene();
  const double expected[] = {0.0, 0.0, 0.6, 1.0, 1.0};
  for (int z = 0; z < kGridZ; ++z) {
    s.object(Color::Red).z = z;
    CHECK(std::abs(reward(id(RewardFamily::Lift, Color::Red), s) - expected[z]) < 1e-9);
  }
}

TEST_CASE("gripper rewards follow aperture and grasp sensor") {
  WorldState s = scene();
  CHECK(reward(id(RewardFamily::OpenGripper), s) == 1.0);
  CHECK(reward(id(RewardFamily::CloseGripper), s) == 0.0);
  s.aperture_steps = 1;
  CHECK(reward(id(RewardFamily::OpenGripper), s) == 0.5);
  CHECK(reward(id(RewardFamily::GraspAnything), s) == 0.0);
  s.grasp_sensor = true;
  CHECK(reward(id(RewardFamily::GraspAnything), s) == 1.0);
}

TEST_CASE("stack is one on top and gated to zero while grasping") {
  WorldState s = scene();
  s.object(Color::Red) = Cell{4, 4, 1};
  CHECK(std::abs(stack_r(s, Color::Red, Color::Green) - 1.0) < 1e-9);
  CHECK(std::abs(reward(id(RewardFamily::Place, Color::Red, Color::Green), s) - 1.0) < 1e-9);
  s.grasp_sensor = true;
  s.held = Color::Red;
  CHECK(stack_r(s, Color::Red, Color::Green) == 0.0);
  CHECK(std::abs(reward(id(RewardFamily::Place, Color::Red, Color::Green), s) - 1.0) < 1e-9);
}

TEST_CASE("composite rewards are products of stack terms") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    WorldState s = wander(seed);
    for (Color x : kColors)
      for (Color y : kColors)
        for (Color z : kColors) {
          if (x == y || y == z || x == z) continue;
          CHECK(std::abs(reward(id(RewardFamily::TripleStack, x, y, z), s) -
                         stack_r(s, x, y) * stack_r(s, y, z)) < 1e-9);
          CHECK(std::abs(reward(id(RewardFamily::Pyramid, x, y, z), s) -
                         stack_r(s, x, y) * stack_r(s, x, z)) < 1e-9);
          CHECK(std::abs(reward(id(RewardFamily::InversePyramid, x, y, z), s) -
                         stack_r(s, x, y) * stack_r(s, z, y)) < 1e-9);
        }
  }
}

TEST_CASE("every reward stays inside the unit interval") {
  SkillLibrary lib = base_library();
  for (const auto& spec : composite_skills()) lib.add_skill(spec);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    WorldState s = wander(seed);
    for (const auto& skill : lib.all()) {
      double r = reward(skill.reward_id, s);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }
}

TEST_CASE("reward ids round-trip and reject unknown names") {
  SkillLibrary lib = base_library();
  for (const auto& spec : composite_skills()) lib.add_skill(spec);
  for (const auto& s : lib.all()) CHECK(RewardId::parse(s.reward_id.to_string()) == s.reward_id);
  CHECK(RewardId::parse("triple_stack_red_green_blue").family == RewardFamily::TripleStack);
  CHECK_THROWS_AS(RewardId::parse("stack_red"), UnknownSkillError);
  CHECK_THROWS_AS(RewardId::parse("juggle_red"), UnknownSkillError);
  CHECK_THROWS_AS(RewardId::parse("reach_red_green"), UnknownSkillError);
}

TEST_CASE("relabeling adds one channel per skill and is idempotent") {
  SkillLibrary lib = base_library();
  Episode e;
  e.states.push_back(scene());
  for (Action a : {Action::MoveXPos, Action::MoveZNeg, Action::Close}) {
    e.actions.push_back(a);
    e.states.push_back(step(e.states.back(), a));
  }
  e.segments.push_back({"reach red", 0, 3});
  Episode once = relabel(e, lib);
  REQUIRE(once.channels.size() == lib.size());
  for (const auto& skill : lib.all()) {
    const RewardChannel* ch = once.channel(skill.caption);
    REQUIRE(ch);
    CHECK(ch->reward_id == skill.reward_id.to_string());
    REQUIRE(ch->values.size() == 3);
    for (std::size_t t = 0; t < 3; ++t)
      CHECK(ch->values[t] == reward(skill.reward_id, e.states[t + 1]));
  }
  CHECK(relabel(once, lib) == once);
  CHECK_FALSE(once.check().has_value());
}

TEST_CASE("threshold rule is strict") {
  CHECK(meets_thresholds({0.7, 0.96}, {}));
  CHECK_FALSE(meets_thresholds({0.7, 0.94}, {}));
  CHECK_FALSE(meets_thresholds({0.5, 0.99}, {}));
  CHECK_FALSE(meets_thresholds({0.95}, {}));
  CHECK(meets_thresholds({0.9501}, {}));
  CHECK_FALSE(meets_thresholds({}, {}));
}

TEST_CASE("judge reads segment-final rewards") {
  SkillLibrary lib = base_library();
  WorldState s = scene();
  Episode e;
  e.states.push_back(s);
  // Drive the gripper onto green, then close it fully.
  std::vector<Action> to_green;
  for (int i = 0; i < 4; ++i) to_green.push_back(Action::MoveXPos);
  for (int i = 0; i < 3; ++i) to_green.push_back(Action::MoveYNeg);
  for (int i = 0; i < 4; ++i) to_green.push_back(Action::MoveZNeg);
  for (Action a : to_green) {
    e.actions.push_back(a);
    e.states.push_back(step(e.states.back(), a));
  }
  std::size_t reach_end = e.actions.size();
  for (Action a : {Action::Close, Action::Close}) {
    e.actions.push_back(a);
    e.states.push_back(step(e.states.back(), a));
  }
  e.segments = {{"reach green", 0, reach_end}, {"close gripper", reach_end, e.actions.size()}};
  e = relabel(e, lib);
  JudgeResult ok = judge_success(e, {"reach green", "close gripper"});
  CHECK(ok.success);
  REQUIRE(ok.segment_finals.size() == 2);
  CHECK(ok.segment_finals[0] == doctest::Approx(1.0));
  CHECK(ok.segment_finals[1] == doctest::Approx(1.0));

  SuccessCriteria strict{0.5, 1.0};
  CHECK_FALSE(judge_success(e, {"reach green", "close gripper"}, strict).success);
  CHECK_THROWS_AS(judge_success(e, {"reach green"}), DataError);
  CHECK_THROWS_AS(judge_success(e, {"reach green", "open gripper"}), DataError);
}
