#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "autocurriculum/llm.hpp"
#include "autocurriculum/skills.hpp"
#include "autocurriculum/world.hpp"

namespace autocurriculum {

struct TrialRecord {
  std::string proposal;
  bool success = false;
  int count = 1;
  bool operator==(const TrialRecord&) const = default;
};

/// Success/failure counts per proposal, in first-seen order.
class TrialHistory {
 public:
  void record(const std::string& proposal, bool success, int count = 1);
  const std::vector<TrialRecord>& records() const { return records_; }
  int count(const std::string& proposal, bool success) const;

  /// Prompt lists with every count expanded into repeated entries.
  std::vector<std::string> completed() const;
  std::vector<std::string> failed() const;

  bool operator==(const TrialHistory&) const = default;

  std::string to_ndjson() const;
  static TrialHistory from_ndjson(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static TrialHistory load(const std::filesystem::path& path);

 private:
  std::vector<TrialRecord> records_;
};

enum class PlanStatus : std::uint8_t { Pending, Executed, Discarded };
std::string_view status_name(PlanStatus s);

struct Plan {
  std::uint64_t plan_id = 0;
  std::string proposal;
  std::vector<std::string> steps;   // free text from the decomposition
  std::vector<std::string> skills;  // retrieved library captions, one per step
  PlanStatus status = PlanStatus::Pending;
  std::string discard_reason;
  std::string proposal_reasoning;
  std::string decomposition_reasoning;

  bool operator==(const Plan&) const = default;
};

/// A response the curriculum could not use. Kept apart from the trial
/// history so rejected text never reaches later prompts.
struct Rejection {
  std::uint64_t plan_id = 0;
  std::string stage;  // proposition, decomposition or retrieval
  std::string reason;
  std::string raw;
};

struct CurriculumConfig {
  double temperature = 0.0;
  std::uint64_t seed = 0;
  int max_consecutive_discards = 10;
  /// Lists the library captions as completed tasks ahead of the real
  /// successes, the way a freshly pretrained agent would report them.
  bool seed_completed_with_library = true;
  bool attach_images = false;
};

/// Thrown when planning keeps failing; the operator has to intervene.
struct PlanningExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Propose -> decompose -> retrieve against one backend. Owns the call
/// counter that derives each call's randomness, so a fixed seed replays
/// the same sequence of plans.
class Curriculum {
 public:
  Curriculum(Backend& backend, CurriculumConfig config,
             const PromptTemplates& templates = PromptTemplates::builtin());

  struct Answer {
    std::string reasoning;
    std::string answer;
  };

  /// Throws ParseError on an unusable response.
  Answer propose(const WorldState& scene, const TrialHistory& history,
                 const std::vector<std::string>& library_captions);
  /// Steps are free text; throws ParseError when the answer is not a list.
  std::pair<std::string, std::vector<std::string>> decompose(
      const std::string& proposal, const WorldState& scene,
      const std::vector<std::string>& available);
  /// Verbatim member of `available`, or nullopt for no match.
  std::optional<std::string> retrieve(const std::string& step,
                                      const std::vector<std::string>& available);

  /// One attempt. Any unusable response or unmatched step discards the plan.
  Plan build_plan(const WorldState& scene, const TrialHistory& history,
                  const SkillLibrary& library, bool converged_only = false);

  /// Retries with fresh scenes until a plan is pending; throws PlanningExhausted
  /// after `max_consecutive_discards` discards in a row.
  Plan plan_until_pending(const std::function<WorldState(int attempt)>& scene_for,
                          const TrialHistory& history, const SkillLibrary& library,
                          bool converged_only = false);

  const std::vector<Plan>& discarded() const { return discarded_; }
  const std::vector<Rejection>& rejections() const { return rejections_; }
  std::uint64_t calls() const { return call_index_; }
  std::uint64_t next_plan_id() const { return next_plan_id_; }

 private:
  std::string call(const PromptBundle& bundle);
  PromptParts scene_parts(const WorldState& scene) const;

  Backend& backend_;
  CurriculumConfig config_;
  const PromptTemplates& templates_;
  std::uint64_t call_index_ = 0;
  std::uint64_t next_plan_id_ = 1;
  std::vector<Plan> discarded_;
  std::vector<Rejection> rejections_;
};

}  // namespace autocurriculum
