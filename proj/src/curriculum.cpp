#include "autocurriculum/curriculum.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "autocurriculum/errors.hpp"

namespace autocurriculum {

using nlohmann::json;

void TrialHistory::record(const std::string& proposal, bool success, int count) {
  if (count < 1) throw DataError("trial count must be positive");
  for (auto& r : records_)
    if (r.proposal == proposal && r.success == success) {
      r.count += count;
      return;
    }
  records_.push_back({proposal, success, count});
}

int TrialHistory::count(const std::string& proposal, bool success) const {
  for (const auto& r : records_)
    if (r.proposal == proposal && r.success == success) return r.count;
  return 0;
}

namespace {

std::vector<std::string> expand(const std::vector<TrialRecord>& records, bool success) {
  std::vector<std::string> out;
  for (const auto& r : records)
    if (r.success == success)
      for (int i = 0; i < r.count; ++i) out.push_back(r.proposal);
  return out;
}

}  // namespace

std::vector<std::string> TrialHistory::completed() const { return expand(records_, true); }
std::vector<std::string> TrialHistory::failed() const { return expand(records_, false); }

std::string TrialHistory::to_ndjson() const {
  std::string out;
  for (const auto& r : records_)
    out += json{{"proposal", r.proposal}, {"outcome", r.success ? "success" : "failure"},
                {"count", r.count}}
               .dump() +
           '\n';
  return out;
}

TrialHistory TrialHistory::from_ndjson(std::string_view text) {
  TrialHistory h;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      const std::string outcome = rec.at("outcome").get<std::string>();
      if (outcome != "success" && outcome != "failure")
        throw DataError("trial outcome must be success or failure");
      h.record(rec.at("proposal").get<std::string>(), outcome == "success",
               rec.at("count").get<int>());
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed trial record: ") + e.what());
    }
  }
  return h;
}

void TrialHistory::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write trial history " + path.string());
  out << to_ndjson();
}

TrialHistory TrialHistory::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read trial history " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_ndjson(buf.str());
}

std::string_view status_name(PlanStatus s) {
  switch (s) {
    case PlanStatus::Pending: return "pending";
    case PlanStatus::Executed: return "executed";
    case PlanStatus::Discarded: return "discarded";
  }
  return "?";
}

Curriculum::Curriculum(Backend& backend, CurriculumConfig config, const PromptTemplates& templates)
    : backend_(backend), config_(config), templates_(templates) {
  if (config_.max_consecutive_discards < 1)
    throw ConfigError("max_consecutive_discards must be at least 1");
}

std::string Curriculum::call(const PromptBundle& bundle) {
  CallOptions options{config_.temperature, config_.seed, call_index_};
  std::string raw = backend_.complete(bundle, options);
  ++call_index_;  // only advanced once the call went through
  return raw;
}

PromptParts Curriculum::scene_parts(const WorldState& scene) const {
  PromptParts parts;
  parts.scene = describe(scene).to_text();
  if (config_.attach_images) parts.scene_png = render_scene_png(scene);
  return parts;
}

Curriculum::Answer Curriculum::propose(const WorldState& scene, const TrialHistory& history,
                                       const std::vector<std::string>& library_captions) {
  PromptParts parts = scene_parts(scene);
  std::vector<std::string> completed;
  if (config_.seed_completed_with_library) completed = library_captions;
  for (auto& s : history.completed()) completed.push_back(std::move(s));
  parts.completed = std::move(completed);
  parts.failed = history.failed();
  auto parsed = parse(call(assemble(PromptKind::Proposition, parts, templates_)),
                      PromptKind::Proposition);
  return {parsed.reasoning, parsed.answer};
}

std::pair<std::string, std::vector<std::string>> Curriculum::decompose(
    const std::string& proposal, const WorldState& scene,
    const std::vector<std::string>& available) {
  if (available.empty()) throw ConfigError("decomposition needs at least one available skill");
  PromptParts parts = scene_parts(scene);
  parts.query = proposal;
  parts.skills = available;
  auto parsed = parse(call(assemble(PromptKind::Decomposition, parts, templates_)),
                      PromptKind::Decomposition);
  return {parsed.reasoning, parse_list(parsed.answer)};
}

std::optional<std::string> Curriculum::retrieve(const std::string& step,
                                                const std::vector<std::string>& available) {
  if (available.empty()) throw ConfigError("retrieval needs at least one available skill");
  PromptParts parts;
  parts.query = step;
  parts.skills = available;
  ParsedResponse parsed;
  try {
    parsed = parse(call(assemble(PromptKind::Retrieval, parts, templates_)), PromptKind::Retrieval);
  } catch (const ParseError&) {
    return std::nullopt;
  }
  const std::string wanted = normalize_caption(parsed.answer);
  for (const auto& caption : available)
    if (normalize_caption(caption) == wanted) return caption;
  return std::nullopt;
}

Plan Curriculum::build_plan(const WorldState& scene, const TrialHistory& history,
                            const SkillLibrary& library, bool converged_only) {
  const std::vector<std::string> available = library.available(converged_only);
  if (available.empty()) throw ConfigError("the skill library has no available skills");

  // A transport failure must leave the curriculum as it was.
  const std::uint64_t saved_calls = call_index_;
  const std::uint64_t saved_id = next_plan_id_;
  Plan plan;
  plan.plan_id = next_plan_id_++;
  auto discard = [&](std::string stage, std::string reason, std::string raw = {}) {
    plan.status = PlanStatus::Discarded;
    plan.discard_reason = stage + ": " + reason;
    rejections_.push_back({plan.plan_id, std::move(stage), std::move(reason), std::move(raw)});
    discarded_.push_back(plan);
    return plan;
  };
  try {
    try {
      auto [reasoning, proposal] = propose(scene, history, available);
      plan.proposal = proposal;
      plan.proposal_reasoning = reasoning;
    } catch (const ParseError& e) {
      return discard("proposition", e.what());
    }
    try {
      auto [reasoning, steps] = decompose(plan.proposal, scene, available);
      plan.steps = std::move(steps);
      plan.decomposition_reasoning = reasoning;
    } catch (const ParseError& e) {
      return discard("decomposition", e.what());
    }
    for (const auto& step : plan.steps) {
      auto caption = retrieve(step, available);
      if (!caption) return discard("retrieval", "no library skill matches '" + step + "'");
      plan.skills.push_back(*caption);
    }
  } catch (const TransportError&) {
    call_index_ = saved_calls;
    next_plan_id_ = saved_id;
    throw;
  }
  plan.status = PlanStatus::Pending;
  return plan;
}

Plan Curriculum::plan_until_pending(const std::function<WorldState(int attempt)>& scene_for,
                                    const TrialHistory& history, const SkillLibrary& library,
                                    bool converged_only) {
  std::string last;
  for (int attempt = 0; attempt < config_.max_consecutive_discards; ++attempt) {
    Plan plan = build_plan(scene_for(attempt), history, library, converged_only);
    if (plan.status == PlanStatus::Pending) return plan;
    last = plan.discard_reason;
  }
  throw PlanningExhausted("no usable plan after " +
                          std::to_string(config_.max_consecutive_discards) +
                          " consecutive discards; last: " + last);
}

}  // namespace autocurriculum
