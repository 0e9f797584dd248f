#include "autocurriculum/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "autocurriculum/diversity.hpp"
#include "autocurriculum/errors.hpp"

namespace autocurriculum {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- configuration ------------------------------------------------------------

namespace {

// Reads fields out of one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  void get_path(const char* key, fs::path& out) {
    std::string s = out.string();
    get(key, s);
    out = s;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key " + where_ + "." + k);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <typename Fn>
void section(ObjectReader& parent, const char* key, Fn&& fn) {
  if (const json* c = parent.child(key)) {
    ObjectReader r(*c, key);
    fn(r);
    r.done();
  }
}

}  // namespace

json RunConfig::to_json() const {
  const auto& a = train.abstraction;
  return {
      {"seed", seed},
      {"paths", {{"work_dir", paths.work_dir.string()}, {"prompts", paths.prompts.string()}}},
      {"backend",
       {{"kind", backend.kind},
        {"temperature", backend.temperature},
        {"url", backend.remote.url},
        {"api_key_env", backend.remote.api_key_env},
        {"timeout_seconds", backend.remote.timeout_seconds},
        {"attempts", backend.remote.attempts},
        {"backoff_seconds", backend.remote.backoff_seconds}}},
      {"pretrain",
       {{"episodes", pretrain.episodes},
        {"episode_steps", pretrain.episode_steps},
        {"epsilon", pretrain.epsilon}}},
      {"train",
       {{"discount", train.discount},
        {"iterations", train.iterations},
        {"eval_interval", train.eval_interval},
        {"updates_per_sweep", train.updates_per_sweep},
        {"eval_episodes", train.eval_episodes},
        {"augment_symmetries", train.augment_symmetries},
        {"xy_clamps", a.xy_clamps},
        {"z_clamp", a.z_clamp},
        {"lift_height", a.lift_height}}},
      {"rewards",
       {{"reach_scale", train.rewards.reach_scale},
        {"above_offset", train.rewards.above_offset},
        {"place_offset", train.rewards.place_offset},
        {"lift_low", train.rewards.lift_low},
        {"lift_high", train.rewards.lift_high}}},
      {"sampler",
       {{"shares", sampler.shares},
        {"upweighted", sampler.upweighted},
        {"upweight_fraction", sampler.upweight_fraction}}},
      {"analysis",
       {{"window_fraction", analysis.window_fraction},
        {"min_window", analysis.min_window},
        {"slope_fraction", analysis.slope_fraction},
        {"level_fraction", analysis.level_fraction},
        {"min_points", analysis.min_points}}},
      {"criteria",
       {{"per_skill_threshold", criteria.per_skill_threshold},
        {"final_skill_threshold", criteria.final_skill_threshold}}},
      {"collect",
       {{"round", collect.round},
        {"workers", collect.workers},
        {"repetitions", collect.repetitions},
        {"budget", collect.budget},
        {"round2_budget", collect.round2_budget},
        {"segment_steps", collect.segment_steps},
        {"epsilon", collect.epsilon},
        {"report_timeout", collect.report_timeout},
        {"converged_only", collect.converged_only},
        {"skills_exclude", collect.skills_exclude},
        {"launch", collect.launch},
        {"checkpoint", collect.checkpoint}}},
      {"improve",
       {{"round", improve.round},
        {"datasets", improve.datasets},
        {"init", improve.init},
        {"output", improve.output},
        {"train_skills", improve.train_skills}}},
      {"analyze",
       {{"checkpoint", analyze.checkpoint},
        {"judge", analyze.judge},
        {"at", analyze.at ? json(*analyze.at) : json(nullptr)}}},
      {"report", {{"checkpoints", report.checkpoints}, {"eval_episodes", report.eval_episodes}}},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  ObjectReader r(j, "config");
  r.get("seed", c.seed);
  section(r, "paths", [&](ObjectReader& s) {
    s.get_path("work_dir", c.paths.work_dir);
    s.get_path("prompts", c.paths.prompts);
  });
  section(r, "backend", [&](ObjectReader& s) {
    s.get("kind", c.backend.kind);
    s.get("temperature", c.backend.temperature);
    s.get("url", c.backend.remote.url);
    s.get("api_key_env", c.backend.remote.api_key_env);
    s.get("timeout_seconds", c.backend.remote.timeout_seconds);
    s.get("attempts", c.backend.remote.attempts);
    s.get("backoff_seconds", c.backend.remote.backoff_seconds);
  });
  section(r, "pretrain", [&](ObjectReader& s) {
    s.get("episodes", c.pretrain.episodes);
    s.get("episode_steps", c.pretrain.episode_steps);
    s.get("epsilon", c.pretrain.epsilon);
  });
  section(r, "train", [&](ObjectReader& s) {
    s.get("discount", c.train.discount);
    s.get("iterations", c.train.iterations);
    s.get("eval_interval", c.train.eval_interval);
    s.get("updates_per_sweep", c.train.updates_per_sweep);
    s.get("eval_episodes", c.train.eval_episodes);
    s.get("augment_symmetries", c.train.augment_symmetries);
    s.get("xy_clamps", c.train.abstraction.xy_clamps);
    s.get("z_clamp", c.train.abstraction.z_clamp);
    s.get("lift_height", c.train.abstraction.lift_height);
  });
  section(r, "rewards", [&](ObjectReader& s) {
    s.get("reach_scale", c.train.rewards.reach_scale);
    s.get("above_offset", c.train.rewards.above_offset);
    s.get("place_offset", c.train.rewards.place_offset);
    s.get("lift_low", c.train.rewards.lift_low);
    s.get("lift_high", c.train.rewards.lift_high);
  });
  section(r, "sampler", [&](ObjectReader& s) {
    s.get("shares", c.sampler.shares);
    s.get("upweighted", c.sampler.upweighted);
    s.get("upweight_fraction", c.sampler.upweight_fraction);
  });
  section(r, "analysis", [&](ObjectReader& s) {
    s.get("window_fraction", c.analysis.window_fraction);
    s.get("min_window", c.analysis.min_window);
    s.get("slope_fraction", c.analysis.slope_fraction);
    s.get("level_fraction", c.analysis.level_fraction);
    s.get("min_points", c.analysis.min_points);
  });
  section(r, "criteria", [&](ObjectReader& s) {
    s.get("per_skill_threshold", c.criteria.per_skill_threshold);
    s.get("final_skill_threshold", c.criteria.final_skill_threshold);
  });
  section(r, "collect", [&](ObjectReader& s) {
    s.get("round", c.collect.round);
    s.get("workers", c.collect.workers);
    s.get("repetitions", c.collect.repetitions);
    s.get("budget", c.collect.budget);
    s.get("round2_budget", c.collect.round2_budget);
    s.get("segment_steps", c.collect.segment_steps);
    s.get("epsilon", c.collect.epsilon);
    s.get("report_timeout", c.collect.report_timeout);
    s.get("converged_only", c.collect.converged_only);
    s.get("skills_exclude", c.collect.skills_exclude);
    s.get("launch", c.collect.launch);
    s.get("checkpoint", c.collect.checkpoint);
  });
  section(r, "improve", [&](ObjectReader& s) {
    s.get("round", c.improve.round);
    s.get("datasets", c.improve.datasets);
    s.get("init", c.improve.init);
    s.get("output", c.improve.output);
    s.get("train_skills", c.improve.train_skills);
  });
  section(r, "analyze", [&](ObjectReader& s) {
    s.get("checkpoint", c.analyze.checkpoint);
    s.get("judge", c.analyze.judge);
    if (const json* at = s.child("at"); at && !at->is_null()) {
      if (!at->is_number_unsigned()) throw ConfigError("analyze.at must be an unsigned integer");
      c.analyze.at = at->get<std::uint64_t>();
    }
  });
  section(r, "report", [&](ObjectReader& s) {
    s.get("checkpoints", c.report.checkpoints);
    s.get("eval_episodes", c.report.eval_episodes);
  });
  r.done();
  c.pretrain.seed = c.seed;
  c.train.seed = c.seed;
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::check() const {
  if (backend.kind != "mock" && backend.kind != "remote")
    throw ConfigError("backend.kind must be mock or remote");
  if (!(backend.temperature >= 0 && backend.temperature <= 2))
    throw ConfigError("backend.temperature must lie in [0, 2]");
  if (backend.kind == "remote" && backend.remote.url.empty())
    throw ConfigError("the remote backend needs backend.url");
  if (paths.work_dir.empty()) throw ConfigError("paths.work_dir must not be empty");
  if (!paths.prompts.empty() && !fs::is_directory(paths.prompts))
    throw ConfigError("prompt directory " + paths.prompts.string() + " does not exist");
  pretrain.check();
  train.check();
  analysis.check();
  criteria.check();
  if (collect.round != 1 && collect.round != 2) throw ConfigError("collect.round must be 1 or 2");
  if (improve.round != 1 && improve.round != 2) throw ConfigError("improve.round must be 1 or 2");
  if (collect.launch != "processes" && collect.launch != "threads")
    throw ConfigError("collect.launch must be processes or threads");
  if (collect.workers < 1 || collect.repetitions < 1 || collect.budget < 1 || collect.round2_budget < 1)
    throw ConfigError("collect sizes must be positive");
  if (analyze.judge != "heuristic" && analyze.judge != "llm")
    throw ConfigError("analyze.judge must be heuristic or llm");
  if (report.eval_episodes < 1) throw ConfigError("report.eval_episodes must be positive");
  if (!(sampler.upweight_fraction > 0 && sampler.upweight_fraction < 1))
    throw ConfigError("sampler.upweight_fraction must lie in (0, 1)");
}

// ---- layout ---------------------------------------------------------------------

namespace {

std::string at_suffix(std::optional<std::uint64_t> at) {
  return at ? "-at" + std::to_string(*at) : "";
}

}  // namespace

fs::path RunLayout::store(const std::string& dataset) const { return root / "stores" / dataset; }
fs::path RunLayout::checkpoint(const std::string& name) const {
  return root / "checkpoints" / (name + ".policy");
}
fs::path RunLayout::curves(const std::string& name) const {
  return root / "curves" / (name + ".ndjson");
}
fs::path RunLayout::library(const std::string& name, std::optional<std::uint64_t> at) const {
  return root / "libraries" / (name + at_suffix(at) + ".ndjson");
}
fs::path RunLayout::judgments(const std::string& name, std::optional<std::uint64_t> at) const {
  return root / "judgments" / (name + at_suffix(at) + ".ndjson");
}
fs::path RunLayout::history(int round) const {
  return root / "collect" / ("round" + std::to_string(round) + "-history.ndjson");
}
fs::path RunLayout::plans(int round) const {
  return root / "collect" / ("round" + std::to_string(round) + "-plans.ndjson");
}
fs::path RunLayout::reports() const { return root / "reports"; }

// ---- helpers ----------------------------------------------------------------------

namespace {

// "stack_red_green" -> "stack".
std::string family_token(const RewardId& id) {
  std::string fam = id.to_string();
  for (int i = 0; i < arity(id.family); ++i) fam.erase(fam.rfind('_'));
  return fam;
}

}  // namespace

bool selects(const SkillSpec& skill, const std::vector<std::string>& selectors) {
  const std::string fam = family_token(skill.reward_id);
  for (const auto& s : selectors)
    if (s == skill.caption || s == fam) return true;
  return false;
}

SkillLibrary full_library() {
  SkillLibrary lib = base_library();
  for (auto& s : composite_skills()) lib.add_skill(std::move(s));
  return lib;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  if (config.kind == "mock") return make_mock_backend();
  if (config.kind == "remote") return make_remote_backend(config.remote);
  throw ConfigError("unknown backend " + config.kind);
}

namespace {

RunLayout layout_of(const RunConfig& c) { return RunLayout{c.paths.work_dir}; }

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw DataError("cannot write " + path.string());
}

const PromptTemplates& templates_of(const RunConfig& c) {
  if (c.paths.prompts.empty()) return PromptTemplates::builtin();
  static std::map<fs::path, PromptTemplates> cache;
  auto it = cache.find(c.paths.prompts);
  if (it == cache.end()) it = cache.emplace(c.paths.prompts, PromptTemplates::load(c.paths.prompts)).first;
  return it->second;
}

Policy load_checkpoint(const RunLayout& layout, const std::string& name) {
  const fs::path p = layout.checkpoint(name);
  if (!fs::exists(p)) throw DataError("checkpoint '" + name + "' not found at " + p.string());
  return Policy::load(p);
}

std::string collect_checkpoint(const RunConfig& c) {
  if (!c.collect.checkpoint.empty()) return c.collect.checkpoint;
  return c.collect.round == 1 ? "base" : "improved";
}

std::string store_name(int round) { return round == 1 ? "self-improvement" : "round2"; }

EpisodeSource store_source(int round) {
  return round == 1 ? EpisodeSource::SelfImprovement : EpisodeSource::Round2;
}

json plan_json(const Plan& p) {
  return {{"plan_id", p.plan_id},
          {"status", status_name(p.status)},
          {"proposal", p.proposal},
          {"steps", p.steps},
          {"skills", p.skills},
          {"discard_reason", p.discard_reason}};
}

}  // namespace

// ---- commands -------------------------------------------------------------------

PretrainOutcome cmd_pretrain(const RunConfig& config) {
  config.check();
  const RunLayout layout = layout_of(config);
  const SkillLibrary library = base_library();
  const fs::path store = layout.store("pretraining");
  if (fs::exists(store) && !fs::is_empty(store))
    throw ConfigError("pretraining store " + store.string() + " already holds data");
  fs::create_directories(store);

  PretrainConfig pc = config.pretrain;
  pc.seed = config.seed;
  std::vector<Episode> episodes = generate_pretraining_data(pc, library, config.train.rewards);
  EpisodeWriter writer(store / "pretraining.ndjson", library);
  for (const auto& e : episodes) writer.append(e);

  WeightedEpisodes data;
  for (const auto& e : episodes) data.episodes.push_back(&e);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  FitResult fitted = fit(data, library, tc);

  fs::create_directories(layout.checkpoint("base").parent_path());
  fitted.policy.save(layout.checkpoint("base"));
  fs::create_directories(layout.curves("base").parent_path());
  save_curves(layout.curves("base"), fitted.curves);
  return {std::move(fitted.policy), std::move(fitted.curves), episodes.size()};
}

CollectionResult cmd_collect(const RunConfig& config, const CollectOptions& options) {
  config.check();
  const RunLayout layout = layout_of(config);
  const int round = config.collect.round;
  const std::string ckpt = collect_checkpoint(config);
  const Policy policy = load_checkpoint(layout, ckpt);

  SkillLibrary library;
  const fs::path analyzed = layout.library(ckpt, config.analyze.at);
  if (fs::exists(analyzed)) {
    library = SkillLibrary::load(analyzed);
  } else if (config.collect.converged_only) {
    throw ConfigError("no analyzed library at " + analyzed.string() +
                      "; run analyze on checkpoint '" + ckpt + "' first");
  } else {
    library = policy_library(policy);
  }
  std::vector<std::string> keep;
  for (const auto& s : library.all())
    if (!selects(s, config.collect.skills_exclude)) keep.push_back(s.caption);
  library = library.restricted_to(keep);

  CollectionConfig cc;
  cc.workers = config.collect.workers;
  cc.repetitions = config.collect.repetitions;
  cc.budget = round == 1 ? config.collect.budget : config.collect.round2_budget;
  cc.segment_steps = config.collect.segment_steps;
  cc.epsilon = config.collect.epsilon;
  cc.seed = config.seed;
  cc.converged_only = config.collect.converged_only;
  cc.report_timeout = config.collect.report_timeout;
  cc.curriculum.temperature = config.backend.temperature;
  cc.templates = &templates_of(config);
  cc.rewards = config.train.rewards;
  cc.criteria = config.criteria;
  cc.store_dir = layout.store(store_name(round));
  cc.source = store_source(round);
  if (config.collect.launch == "processes") {
    if (options.worker_executable.empty())
      throw ConfigError("process workers need the path of the command-line binary");
    const fs::path snapshot = layout.root / "collect" / ("round" + std::to_string(round) + "-config.json");
    write_text(snapshot, config.to_json().dump(2) + "\n");
    cc.launch = WorkerLaunch::Processes;
    cc.worker_command = {options.worker_executable, "worker", "--config", snapshot.string()};
  }

  auto backend = make_backend(config.backend);
  CollectionResult result = run_collection(cc, *backend, policy, library);

  fs::create_directories(layout.history(round).parent_path());
  result.history.save(layout.history(round));
  std::vector<const Plan*> plans;
  for (const auto& p : result.executed) plans.push_back(&p);
  for (const auto& p : result.discarded) plans.push_back(&p);
  std::sort(plans.begin(), plans.end(), [](auto* a, auto* b) { return a->plan_id < b->plan_id; });
  std::string text;
  for (const Plan* p : plans) text += plan_json(*p).dump() + "\n";
  write_text(layout.plans(round), text);
  return result;
}

int cmd_worker(const RunConfig& config, const std::string& host, int port, int index,
               const fs::path& store) {
  const RunLayout layout = layout_of(config);
  const Policy policy = load_checkpoint(layout, collect_checkpoint(config));
  WorkerOptions o;
  o.host = host;
  o.port = port;
  o.index = index;
  o.seed = config.seed;
  o.store_dir = store;
  o.source = store_source(config.collect.round);
  o.rewards = config.train.rewards;
  o.criteria = config.criteria;
  return worker_run(o, policy);
}

ImproveOutcome cmd_improve(const RunConfig& config) {
  config.check();
  const RunLayout layout = layout_of(config);
  const int round = config.improve.round;
  std::vector<std::string> names = config.improve.datasets;
  if (names.empty()) {
    names = {"pretraining", "self-improvement"};
    if (round == 2) names.push_back("round2");
  }
  std::string output = config.improve.output;
  if (output.empty()) {
    if (names == std::vector<std::string>{"pretraining"}) output = "base-only";
    else output = round == 1 ? "improved" : "round2";
  }

  const SkillLibrary full = full_library();
  SkillLibrary fit_library = full;
  if (!config.improve.train_skills.empty()) {
    std::vector<std::string> chosen;
    for (const auto& s : full.all())
      if (selects(s, config.improve.train_skills)) chosen.push_back(s.caption);
    if (chosen.empty()) throw ConfigError("improve.train_skills selects no skill");
    fit_library = full.restricted_to(chosen);
  }

  std::vector<Dataset> datasets;
  for (const auto& name : names) {
    const fs::path dir = layout.store(name);
    if (!fs::exists(dir)) throw DataError("missing store '" + name + "' at " + dir.string());
    LoadResult loaded = load_episodes(dir, {}, config.train.rewards);
    if (loaded.episodes.empty()) throw DataError("store '" + name + "' holds no episodes");
    Dataset d{name, {}};
    d.episodes.reserve(loaded.episodes.size());
    for (auto& e : loaded.episodes) {
      // Channels for skills outside the fit are never read; drop them to save memory.
      std::erase_if(e.channels, [&](const RewardChannel& c) { return !fit_library.contains(c.caption); });
      d.episodes.push_back(relabel(std::move(e), fit_library, config.train.rewards));
    }
    datasets.push_back(std::move(d));
  }

  SamplerConfig sc = config.sampler;
  if (sc.shares.size() != datasets.size()) {
    // The first (prior) dataset keeps half of every batch; the newer ones split the rest.
    if (datasets.size() == 1) {
      sc.shares = {1.0};
    } else {
      sc.shares.assign(datasets.size(), 0.5 / static_cast<double>(datasets.size() - 1));
      sc.shares[0] = 0.5;
    }
  }
  if (sc.upweighted.empty())
    for (const auto& s : composite_skills()) sc.upweighted.push_back(s.caption);
  std::vector<const Dataset*> ptrs;
  for (const auto& d : datasets) ptrs.push_back(&d);
  WeightedEpisodes data = weighted_union(ptrs, sc);

  TrainConfig tc = config.train;
  tc.seed = config.seed;
  FitResult fitted = fit(data, fit_library, tc);

  // Skills left out of the fit keep their table and curve from the starting checkpoint.
  Policy policy = fitted.policy;
  std::vector<LearningCurve> curves = fitted.curves;
  if (!config.improve.train_skills.empty()) {
    const std::string init = config.improve.init.empty() ? "base" : config.improve.init;
    const Policy prior = load_checkpoint(layout, init);
    std::vector<LearningCurve> prior_curves;
    if (fs::exists(layout.curves(init))) prior_curves = load_curves(layout.curves(init));
    policy = Policy(prior.abstraction());
    curves.clear();
    for (const auto& s : full.all()) {
      if (fit_library.contains(s.caption)) {
        policy.adopt(fitted.policy, s.caption);
        for (const auto& c : fitted.curves)
          if (c.caption == s.caption) curves.push_back(c);
      } else if (prior.has(s.caption)) {
        policy.adopt(prior, s.caption);
        for (const auto& c : prior_curves)
          if (c.caption == s.caption) curves.push_back(c);
      }
    }
  }

  fs::create_directories(layout.checkpoint(output).parent_path());
  policy.save(layout.checkpoint(output));
  fs::create_directories(layout.curves(output).parent_path());
  save_curves(layout.curves(output), curves);
  ImproveOutcome out{output, std::move(policy), std::move(curves), {}};
  for (const auto& d : datasets) out.dataset_sizes.push_back(d.episodes.size());
  return out;
}

AnalyzeOutcome cmd_analyze(const RunConfig& config) {
  config.check();
  const RunLayout layout = layout_of(config);
  const std::string& name = config.analyze.checkpoint;
  const Policy policy = load_checkpoint(layout, name);
  const fs::path curve_path = layout.curves(name);
  if (!fs::exists(curve_path)) throw DataError("no curve log for '" + name + "' at " + curve_path.string());
  const std::vector<LearningCurve> curves = load_curves(curve_path);

  std::unique_ptr<Backend> backend;
  std::uint64_t calls = 0;
  Judge judge = [&](const LearningCurve& c) { return judge_heuristic(c, config.analysis); };
  if (config.analyze.judge == "llm") {
    backend = make_backend(config.backend);
    judge = [&](const LearningCurve& c) {
      CallOptions o{config.backend.temperature, config.seed, calls++};
      return judge_llm(c, *backend, o, config.analysis, templates_of(config));
    };
  }

  std::set<std::uint64_t> updates;
  for (const auto& c : curves)
    for (const auto& p : c.points)
      if (!config.analyze.at || p.update_count <= *config.analyze.at) updates.insert(p.update_count);

  AnalyzeOutcome out;
  out.library = policy_library(policy);
  for (std::uint64_t u : updates) {
    std::vector<LearningCurve> prefix;
    for (const auto& c : curves) prefix.push_back(c.truncated(u));
    SweepResult r = sweep(prefix, out.library, judge);
    for (auto& j : r.judgments) out.judgments.push_back(std::move(j));
    std::size_t converged = 0;
    for (const auto& s : out.library.all()) converged += s.converged;
    out.converged_fraction.emplace_back(
        u, out.library.empty() ? 0.0 : static_cast<double>(converged) / static_cast<double>(out.library.size()));
  }
  fs::create_directories(layout.library(name).parent_path());
  out.library.save(layout.library(name, config.analyze.at));
  write_text(layout.judgments(name, config.analyze.at), judgments_to_ndjson(out.judgments));
  return out;
}

double pyramid_family_return(const Policy& policy, int episodes, std::uint64_t seed,
                             const RewardParams& params) {
  double sum = 0;
  int n = 0;
  for (auto f : {RewardFamily::Pyramid, RewardFamily::InversePyramid})
    for (const auto& s : composite_skills(f)) {
      sum += evaluate(policy, s.caption, episodes, seed, params);
      ++n;
    }
  return sum / n;
}

ReportOutcome cmd_report(const RunConfig& config) {
  config.check();
  const RunLayout layout = layout_of(config);
  ReportOutcome out;

  const fs::path base_store = layout.store("pretraining");
  if (!fs::exists(base_store)) throw DataError("missing store 'pretraining' at " + base_store.string());
  const auto baseline = diversity_samples(load_episodes(base_store).episodes);
  for (const std::string name : {"self-improvement", "round2"}) {
    const fs::path dir = layout.store(name);
    if (!fs::exists(dir)) continue;
    auto report = diversity_report(baseline, diversity_samples(load_episodes(dir).episodes), config.seed);
    write_text(layout.reports() / ("diversity-" + name + ".json"), report.to_json() + "\n");
    write_text(layout.reports() / ("diversity-" + name + ".txt"), report.to_table("pretraining", name));
    out.diversity.push_back(std::move(report));
    out.compared.push_back(name);
  }

  std::vector<std::string> names = config.report.checkpoints;
  if (names.empty())
    for (const std::string n : {"base", "base-only", "improved", "round2"})
      if (fs::exists(layout.checkpoint(n))) names.push_back(n);

  json rows = json::array();
  std::ostringstream table;
  table << "checkpoint  family           mean_return\n";
  for (const auto& name : names) {
    const Policy policy = load_checkpoint(layout, name);
    std::map<std::string, std::pair<double, int>> family;
    std::vector<std::string> order;
    for (const auto& caption : policy.captions()) {
      const double ret = evaluate(policy, caption, config.report.eval_episodes, config.seed, config.train.rewards);
      out.evaluation.push_back({name, caption, ret});
      rows.push_back({{"checkpoint", name}, {"caption", caption}, {"mean_return", ret}});
      const std::string fam = family_token(policy.reward_id(caption));
      if (!family.count(fam)) order.push_back(fam);
      family[fam].first += ret;
      family[fam].second += 1;
    }
    for (const auto& f : order) {
      char line[160];
      std::snprintf(line, sizeof line, "%-11s %-16s %8.1f\n", name.c_str(), f.c_str(),
                    family[f].first / family[f].second);
      table << line;
    }
  }
  write_text(layout.reports() / "evaluation.json", rows.dump(1) + "\n");
  write_text(layout.reports() / "evaluation.txt", table.str());
  return out;
}

}  // namespace autocurriculum
