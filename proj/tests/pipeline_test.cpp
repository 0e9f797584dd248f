#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/pipeline.hpp"

using namespace autocurriculum;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny(const fs::path& work) {
  RunConfig c;
  c.paths.work_dir = work;
  c.pretrain.episodes = 60;
  c.train.iterations = 4;
  c.train.eval_interval = 2;
  c.train.eval_episodes = 1;
  c.collect.workers = 2;
  c.collect.repetitions = 2;
  c.collect.budget = 10;
  c.collect.launch = "threads";
  c.collect.converged_only = false;
  c.collect.report_timeout = 30;
  c.report.eval_episodes = 1;
  return c;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(AUTOCURRICULUM_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run configuration round-trips with every default spelled out") {
  RunConfig c;
  c.seed = 12;
  c.collect.skills_exclude = {"stack", "lift red"};
  c.analyze.at = 200000;
  c.sampler.shares = {0.5, 0.25, 0.25};
  c.train.abstraction.xy_clamps = {3, 1};
  json j = c.to_json();
  RunConfig back = RunConfig::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.analyze.at == 200000u);
  CHECK(back.train.abstraction.xy_clamps == std::vector<int>{3, 1});

  RunConfig partial = RunConfig::from_json(json{{"seed", 3}, {"collect", {{"workers", 4}}}});
  CHECK(partial.seed == 3);
  CHECK(partial.collect.workers == 4);
  CHECK(partial.collect.repetitions == 5);
  CHECK(partial.collect.budget == 2000);
  CHECK(partial.backend.kind == "mock");
}

TEST_CASE("unknown or mistyped configuration keys are rejected") {
  CHECK_THROWS_AS(RunConfig::from_json(json{{"seeds", 1}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"collect", {{"worker", 3}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"collect", {{"workers", "ten"}}}}), ConfigError);
  RunConfig c;
  c.collect.launch = "fibers";
  CHECK_THROWS_AS(c.check(), ConfigError);
  c = {};
  c.backend.kind = "remote";
  CHECK_THROWS_AS(c.check(), ConfigError);
}

TEST_CASE("skill selectors match captions or reward families") {
  SkillLibrary lib = full_library();
  CHECK(lib.size() == 36);
  auto picked = [&](const std::vector<std::string>& sel) {
    int n = 0;
    for (const auto& s : lib.all()) n += selects(s, sel);
    return n;
  };
  CHECK(picked({"stack"}) == 6);
  CHECK(picked({"pyramid"}) == 6);
  CHECK(picked({"inverse_pyramid"}) == 6);
  CHECK(picked({"triple_stack", "lift red"}) == 7);
  CHECK(picked({"reach"}) == 3);
  CHECK(picked({"red"}) == 0);
}

TEST_CASE("run layout") {
  RunLayout l{"w"};
  CHECK(l.store("pretraining") == fs::path("w/stores/pretraining"));
  CHECK(l.checkpoint("base") == fs::path("w/checkpoints/base.policy"));
  CHECK(l.library("base", 200000) == fs::path("w/libraries/base-at200000.ndjson"));
  CHECK(l.library("base") == fs::path("w/libraries/base.ndjson"));
  CHECK(l.history(2) == fs::path("w/collect/round2-history.ndjson"));
}

TEST_CASE("stages chain from pretraining to report") {
  TempDir dir("ac_pipeline_flow");
  RunConfig c = tiny(dir.path / "run");
  RunLayout l{c.paths.work_dir};

  PretrainOutcome pre = cmd_pretrain(c);
  CHECK(pre.episodes == 60);
  CHECK(pre.curves.size() == 18);
  CHECK(fs::exists(l.checkpoint("base")));
  CHECK(load_curves(l.curves("base")) == pre.curves);
  CHECK_THROWS_AS(cmd_pretrain(c), ConfigError);

  AnalyzeOutcome an = cmd_analyze(c);
  CHECK(an.judgments.size() >= 1);
  CHECK(fs::exists(l.library("base")));

  CollectionResult col = cmd_collect(c);
  CHECK(col.episodes == 10);
  CHECK(fs::exists(l.history(1)));
  CHECK(load_episodes(l.store("self-improvement")).episodes.size() == 10);
  CHECK_THROWS(cmd_collect(c));  // the store already holds data

  ImproveOutcome imp = cmd_improve(c);
  CHECK(imp.name == "improved");
  CHECK(imp.dataset_sizes == std::vector<std::size_t>{60, 10});
  CHECK(imp.policy.captions().size() == 36);
  CHECK(fs::exists(l.checkpoint("improved")));

  ReportOutcome rep = cmd_report(c);
  CHECK(rep.compared == std::vector<std::string>{"self-improvement"});
  CHECK(fs::exists(l.reports() / "evaluation.json"));
  CHECK(fs::exists(l.reports() / "diversity-self-improvement.json"));
}

TEST_CASE("improve without data is a data error") {
  TempDir dir("ac_pipeline_nodata");
  RunConfig c = tiny(dir.path / "run");
  CHECK_THROWS_AS(cmd_improve(c), DataError);
}

TEST_CASE("command line exit codes") {
  TempDir dir("ac_pipeline_cli");
  const std::string work = "--work-dir " + (dir.path / "run").string();
  CHECK(run_cli("--dump-config") == 0);
  CHECK(run_cli("pretrain --config /nonexistent.json") == 2);
  CHECK(run_cli("pretrain --backend remote " + work) == 2);
  CHECK(run_cli("improve " + work) == 4);

  json cfg = tiny(dir.path / "run").to_json();
  cfg["backend"]["kind"] = "remote";
  cfg["backend"]["url"] = "http://127.0.0.1:9/v1/complete";
  cfg["backend"]["attempts"] = 1;
  cfg["backend"]["timeout_seconds"] = 1.0;
  const fs::path config = dir.path / "remote.json";
  std::ofstream(config) << cfg.dump();
  CHECK(run_cli("pretrain --config " + config.string()) == 0);
  CHECK(run_cli("collect --config " + config.string()) == 3);
}
