#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "autocurriculum/analysis.hpp"
#include "autocurriculum/errors.hpp"

using namespace autocurriculum;

namespace {

nlohmann::json exemplars() {
  std::ifstream in(std::string(AUTOCURRICULUM_PROMPT_DIR) + "/analysis_exemplars.json");
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

LearningCurve curve_of(std::string caption, const std::vector<double>& values) {
  LearningCurve c{std::move(caption), {}};
  for (std::size_t i = 0; i < values.size(); ++i)
    c.points.push_back({(i + 1) * 20000, values[i]});
  return c;
}

class FixedBackend : public Backend {
 public:
  std::string reply;
  bool fail = false;
  std::string complete(const PromptBundle& b, const CallOptions&) override {
    if (fail) throw TransportError("down");
    CHECK(b.kind == PromptKind::Analysis);
    return reply;
  }
  std::string_view kind() const override { return "fixed"; }
};

}  // namespace

TEST_CASE("heuristic agrees with every exemplar verdict") {
  auto ex = exemplars();
  REQUIRE(ex.size() == 6);
  std::vector<std::string> shapes;
  for (const auto& e : ex) {
    CAPTURE(e.at("shape").get<std::string>());
    shapes.push_back(e.at("shape"));
    auto returns = e.at("returns").get<std::vector<double>>();
    CHECK(heuristic_converged(returns, {}) == (e.at("answer") == "YES"));
  }
  CHECK(shapes == std::vector<std::string>{"rising", "plateau", "plateau", "peaked-degenerating",
                                           "dip-recovering", "short"});
}

TEST_CASE("heuristic reasoning describes the verdict") {
  std::string why;
  CHECK_FALSE(heuristic_converged({1, 2, 3}, {}, &why));
  CHECK(why.find("too short") != std::string::npos);
  std::vector<double> flat(12, 300);
  CHECK(heuristic_converged(flat, {}, &why));
  CHECK(why.find("converged") != std::string::npos);
}

TEST_CASE("judge_heuristic stamps the last update count") {
  auto j = judge_heuristic(curve_of("lift red", std::vector<double>(10, 380)));
  CHECK(j.converged);
  CHECK(j.judged_at == 200000);
  CHECK(j.judge == "heuristic");
  CHECK(j.caption == "lift red");
}

TEST_CASE("yes/no answers") {
  CHECK(parse_yes_no("YES") == true);
  CHECK(parse_yes_no(" no. ") == false);
  CHECK(parse_yes_no("Yes!") == true);
  CHECK_FALSE(parse_yes_no("maybe").has_value());
}

TEST_CASE("language-model judge defers on failures") {
  FixedBackend be;
  LearningCurve c = curve_of("reach red", {10, 20, 30});
  be.reply = "Reasoning: flat\nA: YES";
  auto yes = judge_llm(c, be, {});
  CHECK(yes.converged);
  CHECK_FALSE(yes.deferred);
  CHECK(yes.judge == "fixed");

  be.reply = "Reasoning: unsure\nA: perhaps";
  auto odd = judge_llm(c, be, {});
  CHECK_FALSE(odd.converged);
  CHECK(odd.deferred);

  be.fail = true;
  auto down = judge_llm(c, be, {});
  CHECK_FALSE(down.converged);
  CHECK(down.deferred);
}

TEST_CASE("mock judge matches the heuristic") {
  auto mock = make_mock_backend();
  for (const auto& e : exemplars()) {
    auto c = curve_of("x", e.at("returns").get<std::vector<double>>());
    CHECK(judge_llm(c, *mock, {}).converged == judge_heuristic(c).converged);
  }
}

TEST_CASE("sweeps only ever add converged skills") {
  SkillLibrary lib = base_library();
  std::vector<double> flat(12, 350), rising;
  for (int i = 0; i < 12; ++i) rising.push_back(30.0 * i);
  std::vector<LearningCurve> curves{curve_of("lift red", flat), curve_of("reach red", rising),
                                    curve_of("not in library", flat)};
  auto first = sweep(curves, lib, [](const LearningCurve& c) { return judge_heuristic(c); });
  CHECK(first.stop_signals == std::vector<std::string>{"lift red"});
  CHECK(first.judgments.size() == 2);
  CHECK(lib.available(true) == std::vector<std::string>{"lift red"});

  // A judge that would now say NO for everything cannot un-mark.
  auto second = sweep(curves, lib, [](const LearningCurve& c) {
    return ConvergenceJudgment{c.caption, false, false, "no", 0, "test"};
  });
  CHECK(second.judgments.size() == 1);
  CHECK(lib.at("lift red").converged);

  auto third = sweep(curves, lib, [](const LearningCurve&) -> ConvergenceJudgment {
    throw std::runtime_error("judge crashed");
  });
  REQUIRE(third.judgments.size() == 1);
  CHECK(third.judgments[0].deferred);
  CHECK_FALSE(lib.at("reach red").converged);

  // Property: the converged set is monotone across a series of sweeps.
  SkillLibrary grow = base_library();
  std::size_t before = 0;
  for (std::size_t n = 1; n <= 16; ++n) {
    std::vector<LearningCurve> prefix;
    for (const auto& c : grow.captions()) {
      std::vector<double> v;
      for (std::size_t i = 0; i < n; ++i) v.push_back(std::min(390.0, 40.0 * (i + 1)));
      prefix.push_back(curve_of(c, v));
    }
    sweep(prefix, grow, [](const LearningCurve& c) { return judge_heuristic(c); });
    std::size_t now = grow.available(true).size();
    CHECK(now >= before);
    before = now;
  }
  CHECK(before == grow.size());
}

TEST_CASE("curve plots are PNG images") {
  auto png = render_curve(curve_of("x", {0, 100, 400}));
  REQUIRE(png.size() > 8);
  CHECK(png[0] == 0x89);
  CHECK(png[1] == 'P');
  CHECK(png[2] == 'N');
  CHECK(png[3] == 'G');
}

TEST_CASE("judgments serialize one record per line") {
  std::vector<ConvergenceJudgment> js{{"a", true, false, "r", 5, "heuristic"},
                                      {"b", false, true, "d", 6, "mock"}};
  std::string text = judgments_to_ndjson(js);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  CHECK(first.at("caption") == "a");
  CHECK(first.at("converged") == true);
}
