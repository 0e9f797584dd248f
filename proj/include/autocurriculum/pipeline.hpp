#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "autocurriculum/analysis.hpp"
#include "autocurriculum/datastore.hpp"
#include "autocurriculum/diversity.hpp"
#include "autocurriculum/learner.hpp"
#include "autocurriculum/llm.hpp"
#include "autocurriculum/reward.hpp"
#include "autocurriculum/rollout.hpp"
#include "autocurriculum/worker.hpp"

namespace autocurriculum {

struct PathsConfig {
  std::filesystem::path work_dir = "run";
  std::filesystem::path prompts;  // empty: the templates shipped with the build
};

struct BackendConfig {
  std::string kind = "mock";  // mock | remote
  double temperature = 0.3;
  RemoteConfig remote;
};

struct CollectConfig {
  int round = 1;  // 1: base checkpoint, 2: improved checkpoint with composite skills
  int workers = 10;
  int repetitions = 5;
  int budget = 2000;
  int round2_budget = 1000;
  int segment_steps = 50;
  double epsilon = 0.1;  // action noise of the executing policy
  double report_timeout = 120;
  bool converged_only = true;
  std::vector<std::string> skills_exclude;  // captions or reward family names
  std::string launch = "processes";         // processes | threads
  std::string checkpoint;                   // empty: chosen by round
};

struct ImproveConfig {
  int round = 1;
  std::vector<std::string> datasets;  // empty: chosen by round
  std::string init;                   // checkpoint untrained skills come from; empty: base
  std::string output;                 // empty: chosen by round
  /// Captions or family names to fit; empty fits every skill of the library.
  std::vector<std::string> train_skills;
};

struct AnalyzeConfig {
  std::string checkpoint = "base";
  std::string judge = "heuristic";  // heuristic | llm
  std::optional<std::uint64_t> at;  // only points up to this update count
};

struct ReportConfig {
  std::vector<std::string> checkpoints;  // empty: every checkpoint present
  int eval_episodes = 5;
};

/// Everything a run depends on; serializes with every default spelled out.
struct RunConfig {
  std::uint64_t seed = 0;
  PathsConfig paths;
  BackendConfig backend;
  PretrainConfig pretrain{1000, 60, 0.2, 0};
  TrainConfig train;
  SamplerConfig sampler;
  AnalysisConfig analysis;
  SuccessCriteria criteria;
  CollectConfig collect;
  ImproveConfig improve;
  AnalyzeConfig analyze;
  ReportConfig report;

  void check() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are a ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

/// Files a run reads and writes, all under the work directory.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path store(const std::string& dataset) const;  // pretraining | self-improvement | round2
  std::filesystem::path checkpoint(const std::string& name) const;
  std::filesystem::path curves(const std::string& name) const;
  std::filesystem::path library(const std::string& name, std::optional<std::uint64_t> at = {}) const;
  std::filesystem::path judgments(const std::string& name, std::optional<std::uint64_t> at = {}) const;
  std::filesystem::path history(int round) const;
  std::filesystem::path plans(int round) const;
  std::filesystem::path reports() const;
};

/// Exact caption match or reward family name (e.g. "stack", "pyramid").
bool selects(const SkillSpec& skill, const std::vector<std::string>& selectors);

/// Base library plus the composite families.
SkillLibrary full_library();

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

struct PretrainOutcome {
  Policy policy;
  std::vector<LearningCurve> curves;
  std::size_t episodes = 0;
};
PretrainOutcome cmd_pretrain(const RunConfig& config);

struct CollectOptions {
  /// Binary re-invoked as "<exe> worker ..." for process workers.
  std::string worker_executable;
};
CollectionResult cmd_collect(const RunConfig& config, const CollectOptions& options = {});

/// Body of one worker process launched by cmd_collect.
int cmd_worker(const RunConfig& config, const std::string& host, int port, int index,
               const std::filesystem::path& store);

struct ImproveOutcome {
  std::string name;
  Policy policy;
  std::vector<LearningCurve> curves;
  std::vector<std::size_t> dataset_sizes;
};
ImproveOutcome cmd_improve(const RunConfig& config);

struct AnalyzeOutcome {
  SkillLibrary library;
  std::vector<ConvergenceJudgment> judgments;
  /// Converged share of the library after each evaluation point.
  std::vector<std::pair<std::uint64_t, double>> converged_fraction;
};
AnalyzeOutcome cmd_analyze(const RunConfig& config);

struct EvalRow {
  std::string checkpoint;
  std::string caption;
  double mean_return = 0;
};
struct ReportOutcome {
  std::vector<DiversityReport> diversity;  // one per non-baseline store present
  std::vector<std::string> compared;       // store names, same order
  std::vector<EvalRow> evaluation;
};
ReportOutcome cmd_report(const RunConfig& config);

/// Mean greedy return over the pyramid and inverted pyramid skills.
double pyramid_family_return(const Policy& policy, int episodes, std::uint64_t seed,
                             const RewardParams& params = {});

}  // namespace autocurriculum
