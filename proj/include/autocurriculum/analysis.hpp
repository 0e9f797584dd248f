#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "autocurriculum/curve.hpp"
#include "autocurriculum/llm.hpp"
#include "autocurriculum/skills.hpp"

namespace autocurriculum {

struct AnalysisConfig {
  double y_max = kMaxReturn;
  double window_fraction = 0.25;  // trailing share of points inspected
  std::size_t min_window = 3;
  double slope_fraction = 0.02;   // max rise across the window, as a share of y_max
  double level_fraction = 0.9;    // window mean relative to the curve maximum
  std::size_t min_points = 8;

  void check() const;
};

struct ConvergenceJudgment {
  std::string caption;
  bool converged = false;
  bool deferred = false;  // judge failed; treated as not converged
  std::string reasoning;
  std::uint64_t judged_at = 0;
  std::string judge;  // "heuristic" or the backend kind

  bool operator==(const ConvergenceJudgment&) const = default;
};

/// Plateau test on a bare series of returns; also backs the mock judge.
/// Fills `reasoning` when non-null.
bool heuristic_converged(const std::vector<double>& returns, const AnalysisConfig& config,
                         std::string* reasoning = nullptr);

ConvergenceJudgment judge_heuristic(const LearningCurve& curve, const AnalysisConfig& config = {});

/// PNG plot with the y axis fixed to [0, y_max].
std::vector<std::uint8_t> render_curve(const LearningCurve& curve,
                                       const AnalysisConfig& config = {});

/// Few-shot YES/NO query through a backend. Transport or parse failures give
/// a deferred, not-converged judgment.
ConvergenceJudgment judge_llm(const LearningCurve& curve, Backend& backend,
                              const CallOptions& options, const AnalysisConfig& config = {},
                              const PromptTemplates& templates = PromptTemplates::builtin());

/// Reads "YES"/"NO" (case-insensitive, trailing punctuation ignored).
std::optional<bool> parse_yes_no(std::string_view answer);

using Judge = std::function<ConvergenceJudgment(const LearningCurve&)>;

struct SweepResult {
  std::vector<ConvergenceJudgment> judgments;
  std::vector<std::string> stop_signals;  // captions whose training should stop
};

/// Judges every not-yet-converged library skill that has a curve and marks
/// the converged ones. Never un-marks; a throwing judge leaves that skill
/// untouched.
SweepResult sweep(const std::vector<LearningCurve>& curves, SkillLibrary& library,
                  const Judge& judge);

/// Judgment log: one NDJSON record per judgment.
std::string judgments_to_ndjson(const std::vector<ConvergenceJudgment>& judgments);
void append_judgments(const std::filesystem::path& path,
                      const std::vector<ConvergenceJudgment>& judgments);

}  // namespace autocurriculum
