#include <doctest.h>

#include "autocurriculum/random.hpp"
#include "autocurriculum/world.hpp"

using namespace autocurriculum;

namespace {

WorldState empty_scene() {
  WorldState s;
  s.objects = {Cell{0, 0, 0}, Cell{3, 3, 0}, Cell{7, 7, 0}};
  s.tcp = Cell{4, 4, 4};
  return s;
}

WorldState random_walk(std::uint64_t seed, int steps) {
  Rng rng(seed);
  WorldState s = reset(seed);
  for (int i = 0; i < steps; ++i)
    s = step(s, static_cast<Action>(uniform_index(rng, kNumActions)));
  return s;
}

}  // namespace

TEST_CASE("reset places objects on distinct floor cells with an open gripper") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    WorldState s = reset(seed);
    CHECK_FALSE(validate(s).has_value());
    for (Color c : kColors) CHECK(s.object(c).z == 0);
    CHECK(s.aperture_steps == kApertureSteps);
    CHECK_FALSE(s.held.has_value());
  }
  CHECK(reset(7) == reset(7));
  CHECK_FALSE(reset(7) == reset(8));
}

TEST_CASE("moves stop at the lattice boundary") {
  WorldState s = empty_scene();
  s.tcp = Cell{7, 0, 4};
  CHECK(step(s, Action::MoveXPos).tcp == s.tcp);
  CHECK(step(s, Action::MoveYNeg).tcp == s.tcp);
  CHECK(step(s, Action::MoveZPos).tcp == s.tcp);
  CHECK(step(s, Action::MoveXNeg).tcp == Cell{6, 0, 4});
  CHECK(step(s, Action::MoveZNeg).tcp == Cell{7, 0, 3});
}

TEST_CASE("closing on an object grasps it and carries it") {
  WorldState s = empty_scene();
  s.tcp = s.object(Color::Green);
  s = step(s, Action::Close);
  REQUIRE(s.held == Color::Green);
  CHECK(s.aperture_steps == 1);
  CHECK(s.grasp_sensor);
  s = step(s, Action::MoveZPos);
  CHECK(s.object(Color::Green) == Cell{3, 3, 1});
  s = step(s, Action::Open);
  CHECK_FALSE(s.held.has_value());
  CHECK_FALSE(s.grasp_sensor);
  CHECK(s.object(Color::Green) == Cell{3, 3, 0});
}

TEST_CASE("a released object lands on the object below it") {
  WorldState s = empty_scene();
  s.objects[0] = Cell{3, 3, 2};
  s.tcp = s.objects[0];
  s.aperture_steps = 0;
  s.held = Color::Red;
  s.grasp_sensor = true;
  s = step(step(s, Action::Open), Action::Open);
  CHECK(s.object(Color::Red) == Cell{3, 3, 1});
  CHECK(s.supports(Color::Green, Color::Red));
  CHECK(s.resting_on(Color::Green) == Color::Red);
}

TEST_CASE("only the top of a stack can be grasped") {
  WorldState s = empty_scene();
  s.objects[0] = Cell{3, 3, 1};
  s.tcp = Cell{3, 3, 0};
  s = step(step(s, Action::Close), Action::Close);
  CHECK_FALSE(s.held.has_value());
}

TEST_CASE("a held object cannot move into another object") {
  WorldState s = empty_scene();
  s.tcp = Cell{2, 3, 0};
  s.objects[0] = s.tcp;
  s.held = Color::Red;
  s.grasp_sensor = true;
  s.aperture_steps = 0;
  CHECK(step(s, Action::MoveXPos) == s);
}

TEST_CASE("stepping is deterministic and keeps every invariant") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    WorldState s = reset(seed);
    for (int i = 0; i < 300; ++i) {
      auto a = static_cast<Action>(uniform_index(rng, kNumActions));
      WorldState next = step(s, a);
      REQUIRE(next == step(s, a));
      REQUIRE_FALSE(validate(next).has_value());
      s = next;
    }
  }
}

TEST_CASE("scene descriptions round-trip through text") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    WorldState s = random_walk(seed, 200);
    SceneDescription d = describe(s);
    CHECK(SceneDescription::from_text(d.to_text()) == d);
    CHECK(describe(d.to_state()) == d);
  }
}

TEST_CASE("names of colors and actions parse back") {
  for (Color c : kColors) CHECK(parse_color(color_name(c)) == c);
  for (int a = 0; a < kNumActions; ++a)
    CHECK(parse_action(action_name(static_cast<Action>(a))) == static_cast<Action>(a));
  CHECK_FALSE(parse_color("purple").has_value());
}
