#include <doctest.h>

#include <filesystem>
#include <set>

#include "autocurriculum/curve.hpp"
#include "autocurriculum/errors.hpp"
#include "autocurriculum/skills.hpp"

using namespace autocurriculum;

TEST_CASE("base library holds the eighteen basic skills") {
  SkillLibrary lib = base_library();
  CHECK(lib.size() == 18);
  for (const char* c : {"grasp anything", "open gripper", "close gripper", "reach red",
                        "above blue", "lift green", "stack red on green", "stack blue on green"})
    CHECK(lib.contains(c));
  for (const auto& s : lib.all()) {
    CHECK_FALSE(is_composite(s.reward_id.family));
    CHECK_FALSE(s.converged);
  }
  CHECK(lib.at("stack red on green").reward_id.to_string() == "stack_red_green");
}

TEST_CASE("composite skills: six per family with distinct captions") {
  auto all = composite_skills();
  CHECK(all.size() == 18);
  for (RewardFamily f :
       {RewardFamily::TripleStack, RewardFamily::Pyramid, RewardFamily::InversePyramid})
    CHECK(composite_skills(f).size() == 6);
  std::set<std::string> captions, ids;
  const SkillLibrary base = base_library();
  for (const auto& s : base.all()) captions.insert(s.caption);
  for (const auto& s : all) {
    captions.insert(s.caption);
    ids.insert(s.reward_id.to_string());
  }
  CHECK(captions.size() == 36);
  CHECK(ids.size() == 18);
}

TEST_CASE("triple stack captions name the bottom pair first") {
  for (const auto& s : composite_skills(RewardFamily::TripleStack)) {
    auto [x, y, z] = s.reward_id.colors;
    std::string expected = "stack " + std::string(color_name(y)) + " on " +
                           std::string(color_name(z)) + " and " + std::string(color_name(x)) +
                           " on " + std::string(color_name(y));
    CHECK(s.caption == expected);
  }
}

TEST_CASE("converged flag is one-way and restriction keeps order") {
  SkillLibrary lib = base_library();
  lib.mark_converged("lift red").mark_converged("open gripper");
  CHECK(lib.available(true) == std::vector<std::string>{"open gripper", "lift red"});
  lib.mark_converged("lift red");
  CHECK(lib.at("lift red").converged);
  CHECK_THROWS_AS(lib.mark_converged("juggle"), UnknownSkillError);
  CHECK_THROWS_AS(lib.at("juggle"), UnknownSkillError);
  CHECK_THROWS_AS(lib.add_skill({"lift red", lib.at("lift red").reward_id}), DataError);

  SkillLibrary small = lib.restricted_to({"lift red", "grasp anything"});
  CHECK(small.captions() == std::vector<std::string>{"grasp anything", "lift red"});
}

TEST_CASE("library round-trips through ndjson") {
  SkillLibrary lib = base_library();
  for (auto& s : composite_skills()) lib.add_skill(s);
  lib.mark_converged("reach green");
  CHECK(SkillLibrary::from_ndjson(lib.to_ndjson()) == lib);

  auto path = std::filesystem::temp_directory_path() / "ac_skills_test.ndjson";
  lib.save(path);
  CHECK(SkillLibrary::load(path) == lib);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(SkillLibrary::from_ndjson("{\"caption\":\"x\"}\n"), DataError);
  CHECK_THROWS_AS(
      SkillLibrary::from_ndjson("{\"caption\":\"x\",\"reward_id\":\"wobble_red\"}\n"),
      UnknownSkillError);
}

TEST_CASE("curves validate, truncate and round-trip") {
  LearningCurve c{"lift red", {{10000, 0}, {20000, 120.5}, {30000, 390}}};
  CHECK_FALSE(c.check().has_value());
  CHECK(c.truncated(20000).points.size() == 2);
  CHECK(c.truncated(5).points.empty());
  CHECK(c.values() == std::vector<double>{0, 120.5, 390});

  LearningCurve other{"reach red", {{10000, 5}}};
  CHECK(curves_from_ndjson(curves_to_ndjson({c, other})) == std::vector<LearningCurve>{c, other});

  CHECK(LearningCurve{"x", {{2, 1}, {2, 1}}}.check().has_value());
  CHECK(LearningCurve{"x", {{2, 401}}}.check().has_value());
  CHECK(LearningCurve{"x", {{2, -1}}}.check().has_value());
}
