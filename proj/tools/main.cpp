// Command-line entry point: pretrain | collect | improve | analyze | report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/pipeline.hpp"

using namespace autocurriculum;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kTransport = 3, kData = 4 };

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<double> temperature;
  std::optional<int> workers, repetitions, budget, round;
  std::vector<std::string> skills_exclude;
  std::optional<std::uint64_t> at;
  std::optional<std::string> work_dir, checkpoint, output, launch;
  std::vector<std::string> datasets;
  bool dump = false;
};

RunConfig resolve(const Overrides& o, const std::string& command) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  if (o.seed) c.seed = c.pretrain.seed = c.train.seed = *o.seed;
  if (o.backend) c.backend.kind = *o.backend;
  if (o.temperature) c.backend.temperature = *o.temperature;
  if (o.workers) c.collect.workers = *o.workers;
  if (o.repetitions) c.collect.repetitions = *o.repetitions;
  if (o.budget) (c.collect.round == 2 || (o.round && *o.round == 2) ? c.collect.round2_budget : c.collect.budget) = *o.budget;
  if (o.round) c.collect.round = c.improve.round = *o.round;
  if (!o.skills_exclude.empty()) c.collect.skills_exclude = o.skills_exclude;
  if (o.at) c.analyze.at = *o.at;
  if (o.work_dir) c.paths.work_dir = *o.work_dir;
  if (o.launch) c.collect.launch = *o.launch;
  if (o.checkpoint) {
    if (command == "analyze") c.analyze.checkpoint = *o.checkpoint;
    else if (command == "improve") c.improve.init = *o.checkpoint;
    else c.collect.checkpoint = *o.checkpoint;
  }
  if (o.output) c.improve.output = *o.output;
  if (!o.datasets.empty()) c.improve.datasets = o.datasets;
  return c;
}

std::string self_executable(const char* argv0) {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  return ec ? std::string(argv0) : p.string();
}

int run(const std::string& command, const RunConfig& c, const std::string& exe,
        const std::string& host, int port, int index, const std::string& store) {
  if (command == "pretrain") {
    auto r = cmd_pretrain(c);
    std::printf("pretrained %zu skills on %zu episodes -> %s\n", r.curves.size(), r.episodes,
                RunLayout{c.paths.work_dir}.checkpoint("base").c_str());
  } else if (command == "collect") {
    auto r = cmd_collect(c, {exe});
    std::printf("collected %d episodes from %zu plans (%zu discarded)\n", r.episodes,
                r.executed.size(), r.discarded.size());
  } else if (command == "improve") {
    auto r = cmd_improve(c);
    std::printf("fit %zu skills -> %s\n", r.curves.size(),
                RunLayout{c.paths.work_dir}.checkpoint(r.name).c_str());
  } else if (command == "analyze") {
    auto r = cmd_analyze(c);
    std::size_t n = 0;
    for (const auto& s : r.library.all()) n += s.converged;
    std::printf("%zu of %zu skills converged\n", n, r.library.size());
  } else if (command == "report") {
    auto r = cmd_report(c);
    for (std::size_t i = 0; i < r.diversity.size(); ++i)
      std::cout << r.diversity[i].to_table("pretraining", r.compared[i]);
    std::printf("evaluated %zu skill/checkpoint pairs -> %s\n", r.evaluation.size(),
                RunLayout{c.paths.work_dir}.reports().c_str());
  } else if (command == "worker") {
    cmd_worker(c, host, port, index, store);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automatic curriculum over a simulated block-stacking robot"};
  app.fallthrough();
  app.require_subcommand(0, 1);
  Overrides o;
  app.add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Run seed");
  app.add_option("--backend", o.backend, "Language model backend")->check(CLI::IsMember({"mock", "remote"}));
  app.add_option("--temperature", o.temperature, "Sampling temperature");
  app.add_option("--workers", o.workers, "Worker processes for collect");
  app.add_option("--repetitions", o.repetitions, "Episodes per worker per plan");
  app.add_option("--budget", o.budget, "Episode budget of the collection round");
  app.add_option("--skills-exclude", o.skills_exclude, "Captions or reward families hidden from collect")
      ->delimiter(',');
  app.add_option("--at", o.at, "Analyze curves only up to this update count");
  app.add_option("--work-dir", o.work_dir, "Directory holding stores, checkpoints and logs");
  app.add_option("--round", o.round, "Collection / improvement round (1 or 2)");
  app.add_option("--checkpoint", o.checkpoint, "Checkpoint name to collect with, analyze, or start from");
  app.add_option("--output", o.output, "Checkpoint name written by improve");
  app.add_option("--datasets", o.datasets, "Stores improve trains on")->delimiter(',');
  app.add_option("--launch", o.launch, "Worker launch mode")->check(CLI::IsMember({"processes", "threads"}));
  app.add_flag("--dump-config", o.dump, "Print the resolved configuration and exit");

  for (const char* name : {"pretrain", "collect", "improve", "analyze", "report"})
    app.add_subcommand(name, std::string(name) + " stage");
  auto* worker = app.add_subcommand("worker", "")->group("");
  std::string host = "127.0.0.1", store;
  int port = 0, index = 0;
  worker->add_option("--host", host);
  worker->add_option("--port", port)->required();
  worker->add_option("--index", index)->required();
  worker->add_option("--store", store)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const std::string command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
  try {
    RunConfig c = resolve(o, command);
    if (o.dump) {
      std::cout << c.to_json().dump(2) << '\n';
      return kOk;
    }
    if (command.empty()) {
      std::cerr << app.help();
      return kConfig;
    }
    c.check();
    return run(command, c, self_executable(argv[0]), host, port, index, store);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kTransport;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
