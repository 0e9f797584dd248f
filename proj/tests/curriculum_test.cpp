#include <doctest.h>

#include <deque>
#include <fstream>
#include <map>

#include <json.hpp>

#include "autocurriculum/curriculum.hpp"
#include "autocurriculum/errors.hpp"

using namespace autocurriculum;

namespace {

/// Replays canned responses per prompt kind.
class ScriptedBackend : public Backend {
 public:
  std::map<PromptKind, std::deque<std::string>> queue;
  std::vector<PromptBundle> seen;
  bool unreachable = false;

  void push(PromptKind k, std::string reasoning, std::string answer) {
    queue[k].push_back("Reasoning: " + reasoning + "\nA: " + answer);
  }
  std::string complete(const PromptBundle& b, const CallOptions&) override {
    if (unreachable) throw TransportError("scripted outage");
    seen.push_back(b);
    auto& q = queue[b.kind];
    REQUIRE_FALSE(q.empty());
    std::string r = q.front();
    q.pop_front();
    return r;
  }
  std::string_view kind() const override { return "scripted"; }
};

std::string golden_raw(const std::string& name) {
  std::ifstream in(std::string(AUTOCURRICULUM_TEST_DATA) + "/golden_transcripts.json");
  for (const auto& rec : nlohmann::json::parse(in))
    if (rec.at("name") == name) return rec.at("raw");
  FAIL("no golden transcript " << name);
  return {};
}

SkillLibrary converged_base() {
  SkillLibrary lib = base_library();
  for (const auto& c : lib.captions()) lib.mark_converged(c);
  return lib;
}

}  // namespace

TEST_CASE("a plan walks propose, decompose and retrieve") {
  ScriptedBackend be;
  be.push(PromptKind::Proposition, "two objects are free", "stack red on green then blue on red");
  be.push(PromptKind::Decomposition, "two stacks", "[put red onto green, Stack blue on red.]");
  be.push(PromptKind::Retrieval, "matches", "Stack Red on Green");
  be.push(PromptKind::Retrieval, "matches", "stack blue on red.");
  Curriculum cur(be, {});
  Plan p = cur.build_plan(reset(1), {}, converged_base(), true);
  CHECK(p.status == PlanStatus::Pending);
  CHECK(p.plan_id == 1);
  CHECK(p.proposal == "stack red on green then blue on red");
  CHECK(p.steps == std::vector<std::string>{"put red onto green", "Stack blue on red."});
  CHECK(p.skills == std::vector<std::string>{"stack red on green", "stack blue on red"});
  CHECK(cur.calls() == 4);
  CHECK(cur.rejections().empty());

  REQUIRE(be.seen.size() == 4);
  const Field* skills = be.seen[1].slot(label::kSkills);
  REQUIRE(skills);
  CHECK(skills->text == render_list(converged_base().captions()));
  CHECK(be.seen[2].slot(label::kQuery)->text == "put red onto green");
}

TEST_CASE("an unparseable decomposition discards the plan") {
  ScriptedBackend be;
  be.push(PromptKind::Proposition, "x", "build a slanted tower");
  be.queue[PromptKind::Decomposition].push_back(golden_raw("EX5"));
  Curriculum cur(be, {});
  TrialHistory history;
  Plan p = cur.build_plan(reset(2), history, converged_base());
  CHECK(p.status == PlanStatus::Discarded);
  REQUIRE(cur.rejections().size() == 1);
  CHECK(cur.rejections()[0].stage == "decomposition");
  CHECK(cur.discarded().size() == 1);
  CHECK(history.records().empty());
}

TEST_CASE("a step with no matching skill discards the plan") {
  ScriptedBackend be;
  be.push(PromptKind::Proposition, "x", "juggle the objects");
  be.push(PromptKind::Decomposition, "x", "[reach red, juggle]");
  be.push(PromptKind::Retrieval, "x", "reach red");
  be.push(PromptKind::Retrieval, "nothing induces juggling", "none");
  Curriculum cur(be, {});
  Plan p = cur.build_plan(reset(3), {}, converged_base());
  CHECK(p.status == PlanStatus::Discarded);
  REQUIRE(cur.rejections().size() == 1);
  CHECK(cur.rejections()[0].stage == "retrieval");
  CHECK(p.discard_reason.find("juggle") != std::string::npos);
}

TEST_CASE("retrieval only returns verbatim members of the available list") {
  ScriptedBackend be;
  SkillLibrary lib = converged_base();
  be.push(PromptKind::Retrieval, "x", "lift red");
  be.push(PromptKind::Retrieval, "x", "lift the red object");
  be.push(PromptKind::Retrieval, "x", "no fields here");
  be.queue[PromptKind::Retrieval].back() = "just text";
  Curriculum cur(be, {});
  CHECK(cur.retrieve("raise red", lib.captions()) == "lift red");
  CHECK_FALSE(cur.retrieve("raise red", lib.captions()).has_value());
  CHECK_FALSE(cur.retrieve("raise red", lib.captions()).has_value());
  CHECK_THROWS_AS(cur.retrieve("raise red", {}), ConfigError);
}

TEST_CASE("a transport failure leaves the curriculum untouched") {
  ScriptedBackend be;
  be.unreachable = true;
  Curriculum cur(be, {});
  CHECK_THROWS_AS(cur.build_plan(reset(4), {}, converged_base()), TransportError);
  CHECK(cur.calls() == 0);
  CHECK(cur.next_plan_id() == 1);
  CHECK(cur.rejections().empty());
}

TEST_CASE("an empty library is a configuration error") {
  ScriptedBackend be;
  Curriculum cur(be, {});
  CHECK_THROWS_AS(cur.build_plan(reset(5), {}, base_library(), true), ConfigError);
}

TEST_CASE("planning gives up after the configured number of discards") {
  ScriptedBackend be;
  for (int i = 0; i < 3; ++i) {
    be.push(PromptKind::Proposition, "x", "juggle");
    be.push(PromptKind::Decomposition, "x", "[juggle]");
    be.push(PromptKind::Retrieval, "x", "none");
  }
  CurriculumConfig cfg;
  cfg.max_consecutive_discards = 3;
  Curriculum cur(be, cfg);
  int scenes = 0;
  CHECK_THROWS_AS(cur.plan_until_pending([&](int a) { ++scenes; return reset(a); }, {},
                                         converged_base()),
                  PlanningExhausted);
  CHECK(scenes == 3);
  CHECK(cur.discarded().size() == 3);
}

TEST_CASE("mock-backed plans replay exactly and use library captions") {
  SkillLibrary lib = converged_base();
  auto run = [&] {
    auto mock = make_mock_backend();
    CurriculumConfig cfg;
    cfg.temperature = 0.3;
    cfg.seed = 9;
    Curriculum cur(*mock, cfg);
    TrialHistory history;
    std::vector<Plan> plans;
    for (int i = 0; i < 20; ++i) {
      Plan p = cur.plan_until_pending([&](int a) { return reset(100 * i + a); }, history, lib,
                                      true);
      history.record(p.proposal, i % 3 == 0);
      plans.push_back(p);
    }
    return plans;
  };
  auto a = run();
  CHECK(a == run());
  for (const auto& p : a) {
    CHECK(p.skills.size() == p.steps.size());
    for (const auto& s : p.skills) CHECK(lib.contains(s));
  }
}

TEST_CASE("trial history counts and expands entries") {
  TrialHistory h;
  h.record("lift red", true);
  h.record("stack red on green", false, 2);
  h.record("lift red", true, 2);
  CHECK(h.count("lift red", true) == 3);
  CHECK(h.count("lift red", false) == 0);
  CHECK(h.completed() == std::vector<std::string>{"lift red", "lift red", "lift red"});
  CHECK(h.failed() == std::vector<std::string>{"stack red on green", "stack red on green"});
  CHECK(TrialHistory::from_ndjson(h.to_ndjson()) == h);
}
