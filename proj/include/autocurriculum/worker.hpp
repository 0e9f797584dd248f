#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "autocurriculum/bus.hpp"
#include "autocurriculum/curriculum.hpp"
#include "autocurriculum/episode.hpp"
#include "autocurriculum/learner.hpp"
#include "autocurriculum/reward.hpp"

namespace autocurriculum {

// ---- workers ------------------------------------------------------------------

struct WorkerOptions {
  std::string host = "127.0.0.1";
  int port = 0;
  int index = 0;
  std::uint64_t seed = 0;
  std::filesystem::path store_dir;  // shards go to <store_dir>/worker-NN.ndjson
  EpisodeSource source = EpisodeSource::SelfImprovement;
  RewardParams rewards;
  SuccessCriteria criteria;
  double connect_timeout = 10;
};

std::string worker_name(int index);
std::filesystem::path worker_shard(const std::filesystem::path& store_dir, int index);

/// Skills of a policy as a library; used as the channel set of worker shards.
SkillLibrary policy_library(const Policy& policy);

/// Reset seed of one repetition; identical whichever process runs it.
std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t plan_id, int worker_index, int repetition);

/// Joins the bus and executes every PLAN it receives until the broker goes
/// away or `stop` is set. Each repetition is stored and reported; a caption
/// the policy does not know yields a failed report carrying the error.
/// Returns the number of episodes stored.
int worker_run(const WorkerOptions& options, const Policy& policy,
               const std::atomic<bool>* stop = nullptr);

// ---- coordinator --------------------------------------------------------------

struct BroadcastReceipt {
  std::uint64_t plan_id = 0;
  PlanPayload payload;
  std::vector<int> workers;  // indices the plan went to
  int expected = 0;
};

struct Collected {
  std::vector<EpisodeReport> reports;  // sorted by (worker_index, repetition)
  int duplicates = 0;
  int expected = 0;  // after subtracting repetitions owed by departed workers
  bool timed_out = false;
};

/// Curriculum side of the bus.
class Coordinator {
 public:
  Coordinator(const std::string& host, int port, double connect_timeout = 10);

  int workers() const { return workers_; }
  /// Blocks until `n` workers have joined; throws TransportError on timeout.
  void wait_for_workers(int n, double timeout_seconds);
  /// Throws DataError for a plan that is not pending and TransportError when
  /// the broker refuses it.
  BroadcastReceipt broadcast_plan(const Plan& plan, const PlanPayload& payload,
                                  double timeout_seconds = 10);
  /// Gathers reports for one plan, one per (worker, repetition).
  Collected collect_reports(const BroadcastReceipt& receipt, double timeout_seconds);

 private:
  BusMessage next(double timeout_seconds, bool& timed_out);
  void track(const BusMessage& m);

  BusConnection conn_;
  std::deque<BusMessage> backlog_;
  int workers_ = 0;
  std::vector<int> departed_;  // worker indices seen leaving since the last broadcast
};

// ---- collection runs ----------------------------------------------------------

enum class WorkerLaunch : std::uint8_t { Threads, Processes };

struct CollectionConfig {
  int workers = 10;
  int repetitions = 5;
  int budget = 500;  // episodes
  int segment_steps = 50;
  double epsilon = 0.0;  // action noise during execution
  std::uint64_t seed = 0;
  bool converged_only = true;
  double report_timeout = 120;
  CurriculumConfig curriculum;
  const PromptTemplates* templates = nullptr;  // null: the shipped templates
  RewardParams rewards;
  SuccessCriteria criteria;
  std::filesystem::path store_dir;
  EpisodeSource source = EpisodeSource::SelfImprovement;
  WorkerLaunch launch = WorkerLaunch::Threads;
  /// Process mode: argv prefix; "--port", "--index" and "--store" get appended.
  std::vector<std::string> worker_command;

  void check() const;
};

struct CollectionResult {
  TrialHistory history;
  std::vector<Plan> executed;
  std::vector<Plan> discarded;
  std::vector<Rejection> rejections;
  std::map<std::uint64_t, Collected> reports;  // by plan id
  BrokerStats bus;
  int episodes = 0;
};

/// Brings up a broker and the workers, then plans and fans out until the
/// episode budget is spent. The last plan's repetitions are trimmed so the
/// budget is hit exactly. `store_dir` must not exist yet or be empty.
CollectionResult run_collection(const CollectionConfig& config, Backend& backend,
                                const Policy& policy, const SkillLibrary& library);

}  // namespace autocurriculum
