#include "autocurriculum/worker.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include "autocurriculum/datastore.hpp"
#include "autocurriculum/errors.hpp"
#include "autocurriculum/rollout.hpp"

extern char** environ;

namespace autocurriculum {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string worker_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "worker-%02d", index);
  return buf;
}

std::filesystem::path worker_shard(const std::filesystem::path& store_dir, int index) {
  return store_dir / (worker_name(index) + ".ndjson");
}

SkillLibrary policy_library(const Policy& policy) {
  std::vector<SkillSpec> skills;
  for (const auto& c : policy.captions()) skills.push_back({c, policy.reward_id(c)});
  return SkillLibrary(std::move(skills));
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t plan_id, int worker_index,
                           int repetition) {
  return derive_seed(seed, {plan_id, static_cast<std::uint64_t>(worker_index),
                            static_cast<std::uint64_t>(repetition)});
}

int worker_run(const WorkerOptions& options, const Policy& policy, const std::atomic<bool>* stop) {
  const std::string name = worker_name(options.index);
  const SkillLibrary library = policy_library(policy);
  EpisodeWriter writer(worker_shard(options.store_dir, options.index), library);
  BusConnection conn = BusConnection::connect(options.host, options.port, options.connect_timeout);
  conn.send(join_message(name, "worker", options.index));

  int stored = 0;
  while (!stop || !stop->load()) {
    std::optional<BusMessage> m;
    try {
      m = conn.receive(0.2);
    } catch (const TransportError&) {
      break;  // the broker shut down
    }
    if (!m) continue;
    if (m->type == MessageType::Status && m->fields.value("event", "") == "rejected")
      throw TransportError("broker rejected " + name + ": " + m->fields.value("reason", ""));
    if (m->type != MessageType::Plan) continue;

    const PlanPayload plan = plan_payload(*m);
    const std::uint64_t plan_id = *m->plan_id;
    for (int rep = 0; rep < plan.repetitions_for(options.index); ++rep) {
      EpisodeReport report;
      report.worker = name;
      report.worker_index = options.index;
      report.plan_id = plan_id;
      report.repetition = rep;
      const std::uint64_t seed = episode_seed(options.seed, plan_id, options.index, rep);
      try {
        Rng rng(derive_seed(seed, {2}));
        Episode ep = execute_plan(policy, plan.captions, reset(seed), plan.segment_steps,
                                  plan.epsilon, rng, library, options.rewards);
        JudgeResult judged = judge_success(ep, plan.captions, options.criteria);
        ep.id = "p" + std::to_string(plan_id) + "-w" + std::to_string(options.index) + "-r" +
                std::to_string(rep);
        ep.seed = seed;
        ep.source = options.source;
        ep.success = judged.success;
        writer.append(ep);
        ++stored;
        report.success = judged.success;
        report.segment_finals = std::move(judged.segment_finals);
        report.episode_ref = writer.path().filename().string() + "#" + ep.id;
      } catch (const DataError& e) {
        report.error = e.what();
      }
      try {
        conn.send(report_message(report));
      } catch (const TransportError&) {
        return stored;
      }
    }
  }
  return stored;
}

// ---- coordinator --------------------------------------------------------------

Coordinator::Coordinator(const std::string& host, int port, double connect_timeout)
    : conn_(BusConnection::connect(host, port, connect_timeout)) {
  conn_.send(join_message("curriculum", "curriculum"));
  bool timed_out = false;
  while (true) {
    BusMessage m = next(connect_timeout, timed_out);
    if (timed_out) throw TransportError("broker did not acknowledge the curriculum");
    if (m.type != MessageType::Status) {
      backlog_.push_back(std::move(m));
      continue;
    }
    const std::string event = m.fields.value("event", "");
    if (event == "rejected") throw TransportError("broker rejected the curriculum");
    if (event == "joined") {
      workers_ = m.fields.value("workers", 0);
      return;
    }
  }
}

BusMessage Coordinator::next(double timeout_seconds, bool& timed_out) {
  timed_out = false;
  if (!backlog_.empty()) {
    BusMessage m = std::move(backlog_.front());
    backlog_.pop_front();
    return m;
  }
  auto m = conn_.receive(timeout_seconds);
  if (!m) {
    timed_out = true;
    return {};
  }
  track(*m);
  return *m;
}

void Coordinator::track(const BusMessage& m) {
  if (m.type != MessageType::Status || m.sender != "broker") return;
  const std::string event = m.fields.value("event", "");
  if (event == "worker_joined") workers_ = m.fields.value("workers", workers_);
  if (event == "worker_left") {
    workers_ = m.fields.value("workers", workers_);
    departed_.push_back(m.fields.value("worker_index", -1));
  }
}

void Coordinator::wait_for_workers(int n, double timeout_seconds) {
  const auto deadline = Clock::now() + std::chrono::milliseconds(static_cast<long>(timeout_seconds * 1000));
  std::deque<BusMessage> keep;
  while (workers_ < n) {
    const double left = std::chrono::duration<double>(deadline - Clock::now()).count();
    if (left <= 0) break;
    bool timed_out = false;
    BusMessage m = next(left, timed_out);
    if (timed_out) break;
    if (m.type != MessageType::Status) keep.push_back(std::move(m));
  }
  for (auto& m : keep) backlog_.push_back(std::move(m));
  if (workers_ < n)
    throw TransportError("only " + std::to_string(workers_) + " of " + std::to_string(n) +
                         " workers joined");
}

BroadcastReceipt Coordinator::broadcast_plan(const Plan& plan, const PlanPayload& payload,
                                             double timeout_seconds) {
  if (plan.status != PlanStatus::Pending)
    throw DataError("plan " + std::to_string(plan.plan_id) + " is " +
                    std::string(status_name(plan.status)) + ", not pending");
  departed_.clear();
  conn_.send(plan_message("curriculum", plan.plan_id, payload));
  std::deque<BusMessage> keep;
  const auto deadline = Clock::now() + std::chrono::milliseconds(static_cast<long>(timeout_seconds * 1000));
  while (true) {
    const double left = std::chrono::duration<double>(deadline - Clock::now()).count();
    bool timed_out = left <= 0;
    BusMessage m;
    if (!timed_out) m = next(left, timed_out);
    if (timed_out) throw TransportError("broker did not acknowledge plan " + std::to_string(plan.plan_id));
    const std::string event = m.type == MessageType::Status ? m.fields.value("event", "") : "";
    const bool ours = m.plan_id == plan.plan_id;
    if (ours && event == "refused") {
      for (auto& k : keep) backlog_.push_back(std::move(k));
      throw TransportError("broker refused plan " + std::to_string(plan.plan_id) + ": " +
                           m.fields.value("reason", ""));
    }
    if (ours && event == "broadcast") {
      BroadcastReceipt r;
      r.plan_id = plan.plan_id;
      r.payload = payload;
      for (const auto& w : m.fields.at("workers")) r.workers.push_back(w.value("worker_index", -1));
      r.expected = m.fields.value("expected", 0);
      for (auto& k : keep) backlog_.push_back(std::move(k));
      return r;
    }
    if (m.type != MessageType::Status) keep.push_back(std::move(m));
  }
}

Collected Coordinator::collect_reports(const BroadcastReceipt& receipt, double timeout_seconds) {
  Collected out;
  out.expected = receipt.expected;
  std::set<std::pair<int, int>> seen;
  std::map<int, int> received_from;
  std::set<int> gone;
  std::deque<BusMessage> keep;

  auto settle_departures = [&] {
    for (int idx : departed_) {
      if (!gone.insert(idx).second) continue;
      if (std::find(receipt.workers.begin(), receipt.workers.end(), idx) == receipt.workers.end())
        continue;
      out.expected -= receipt.payload.repetitions_for(idx) - received_from[idx];
    }
  };

  const auto deadline = Clock::now() + std::chrono::milliseconds(static_cast<long>(timeout_seconds * 1000));
  settle_departures();
  while (static_cast<int>(out.reports.size()) < out.expected) {
    const double left = std::chrono::duration<double>(deadline - Clock::now()).count();
    bool timed_out = left <= 0;
    BusMessage m;
    if (!timed_out) m = next(left, timed_out);
    if (timed_out) {
      out.timed_out = true;
      break;
    }
    if (m.type == MessageType::Status) {
      settle_departures();
      continue;
    }
    if (m.type != MessageType::EpisodeReport || m.plan_id != receipt.plan_id) {
      if (m.type == MessageType::EpisodeReport) ++out.duplicates;  // late report of an older plan
      else keep.push_back(std::move(m));
      continue;
    }
    EpisodeReport r = episode_report(m);
    if (gone.count(r.worker_index) || !seen.insert({r.worker_index, r.repetition}).second) {
      ++out.duplicates;
      continue;
    }
    ++received_from[r.worker_index];
    out.reports.push_back(std::move(r));
  }
  for (auto& k : keep) backlog_.push_back(std::move(k));
  std::sort(out.reports.begin(), out.reports.end(), [](const auto& a, const auto& b) {
    return std::pair(a.worker_index, a.repetition) < std::pair(b.worker_index, b.repetition);
  });
  return out;
}

// ---- collection runs ----------------------------------------------------------

void CollectionConfig::check() const {
  if (workers < 1) throw ConfigError("workers must be positive");
  if (repetitions < 1) throw ConfigError("repetitions must be positive");
  if (budget < 1) throw ConfigError("the episode budget must be positive");
  if (segment_steps < 1) throw ConfigError("segment_steps must be positive");
  if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(report_timeout > 0)) throw ConfigError("report_timeout must be positive");
  if (store_dir.empty()) throw ConfigError("a store directory is required");
  if (launch == WorkerLaunch::Processes && worker_command.empty())
    throw ConfigError("process workers need a worker command");
  criteria.check();
  rewards.check();
}

namespace {

// Repetitions per worker for a plan that may only spend `remaining` episodes.
std::vector<int> trim_quota(int workers, int repetitions, int remaining) {
  if (remaining >= workers * repetitions) return {};
  std::vector<int> quota(static_cast<std::size_t>(workers), remaining / workers);
  for (int i = 0; i < remaining % workers; ++i) ++quota[static_cast<std::size_t>(i)];
  return quota;
}

class WorkerPool {
 public:
  WorkerPool(const CollectionConfig& config, const Policy& policy, int port) {
    for (int i = 0; i < config.workers; ++i) {
      if (config.launch == WorkerLaunch::Threads) {
        WorkerOptions o;
        o.port = port;
        o.index = i;
        o.seed = config.seed;
        o.store_dir = config.store_dir;
        o.source = config.source;
        o.rewards = config.rewards;
        o.criteria = config.criteria;
        threads_.emplace_back([this, o, &policy] {
          try {
            worker_run(o, policy, &stop_);
          } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
          }
        });
      } else {
        std::vector<std::string> args = config.worker_command;
        for (std::string s : {"--port", std::to_string(port).c_str(), "--index"}) args.push_back(s);
        args.push_back(std::to_string(i));
        args.push_back("--store");
        args.push_back(config.store_dir.string());
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid_t pid = 0;
        if (posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0)
          throw TransportError("cannot start worker process " + args[0]);
        pids_.push_back(pid);
      }
    }
  }

  // Workers still running here are left over from an error.
  ~WorkerPool() {
    for (pid_t pid : pids_) ::kill(pid, SIGTERM);
    join();
  }

  // Workers leave once the broker closes; this only waits for them.
  void join() {
    stop_ = true;
    for (auto& t : threads_)
      if (t.joinable()) t.join();
    threads_.clear();
    for (pid_t pid : pids_) {
      int status = 0;
      ::waitpid(pid, &status, 0);
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) failed_ = true;
    }
    pids_.clear();
  }

  void rethrow() {
    if (error_) std::rethrow_exception(error_);
    if (failed_) throw TransportError("a worker process exited with an error");
  }

 private:
  std::atomic<bool> stop_{false};
  std::vector<std::thread> threads_;
  std::vector<pid_t> pids_;
  std::mutex mutex_;
  std::exception_ptr error_;
  bool failed_ = false;
};

}  // namespace

CollectionResult run_collection(const CollectionConfig& config, Backend& backend,
                                const Policy& policy, const SkillLibrary& library) {
  config.check();
  namespace fs = std::filesystem;
  if (fs::exists(config.store_dir) && !fs::is_empty(config.store_dir))
    throw ConfigError("store directory " + config.store_dir.string() + " is not empty");
  fs::create_directories(config.store_dir);

  Broker broker;
  broker.start();
  CollectionResult result;
  {
    Coordinator coordinator("127.0.0.1", broker.port());
    WorkerPool pool(config, policy, broker.port());
    coordinator.wait_for_workers(config.workers, 60);

    CurriculumConfig cc = config.curriculum;
    cc.seed = config.seed;
    Curriculum curriculum(backend, cc, config.templates ? *config.templates : PromptTemplates::builtin());
    std::uint64_t round = 0;
    while (result.episodes < config.budget) {
      const std::size_t discarded_before = curriculum.discarded().size();
      Plan plan = curriculum.plan_until_pending(
          [&](int attempt) {
            return reset(derive_seed(config.seed, {0x5ce4e, round, static_cast<std::uint64_t>(attempt)}));
          },
          result.history, library, config.converged_only);
      ++round;
      for (std::size_t i = discarded_before; i < curriculum.discarded().size(); ++i)
        result.discarded.push_back(curriculum.discarded()[i]);

      PlanPayload payload;
      payload.captions = plan.skills;
      payload.repetitions = config.repetitions;
      payload.segment_steps = config.segment_steps;
      payload.epsilon = config.epsilon;
      payload.quota = trim_quota(config.workers, config.repetitions, config.budget - result.episodes);

      BroadcastReceipt receipt = coordinator.broadcast_plan(plan, payload);
      plan.status = PlanStatus::Executed;
      Collected got = coordinator.collect_reports(receipt, config.report_timeout);
      if (got.expected <= 0 && got.reports.empty())
        throw TransportError("every worker left during plan " + std::to_string(plan.plan_id));

      int ok = 0, failed = 0;
      for (const auto& r : got.reports) {
        if (r.error.empty()) ++result.episodes;
        (r.success ? ok : failed) += 1;
      }
      // A plan whose every report is an error spent nothing; stop rather than spin.
      if (!got.reports.empty() && ok + failed > 0 &&
          std::all_of(got.reports.begin(), got.reports.end(), [](const auto& r) { return !r.error.empty(); }))
        throw DataError("plan " + std::to_string(plan.plan_id) + " failed on every worker: " +
                        got.reports.front().error);
      if (ok) result.history.record(plan.proposal, true, ok);
      if (failed) result.history.record(plan.proposal, false, failed);
      result.reports.emplace(plan.plan_id, std::move(got));
      result.executed.push_back(std::move(plan));
    }
    result.rejections = curriculum.rejections();
    result.bus = broker.stats();
    broker.stop();
    pool.join();
    pool.rethrow();
  }
  return result;
}

}  // namespace autocurriculum
