#include "autocurriculum/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/image.hpp"

namespace autocurriculum {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f", v);
  return buf;
}

// Least-squares slope of ys against their index.
double ols_slope(const std::vector<double>& ys) {
  const double n = static_cast<double>(ys.size());
  if (ys.size() < 2) return 0;
  double mx = (n - 1) / 2, my = 0;
  for (double y : ys) my += y;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    sxy += (static_cast<double>(i) - mx) * (ys[i] - my);
    sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
  }
  return sxy / sxx;
}

}  // namespace

void AnalysisConfig::check() const {
  if (!(y_max > 0 && slope_fraction > 0 && level_fraction > 0 && min_window > 0))
    throw ConfigError("analysis thresholds must be positive");
  if (!(window_fraction > 0 && window_fraction < 1))
    throw ConfigError("analysis window fraction must lie in (0, 1)");
}

bool heuristic_converged(const std::vector<double>& returns, const AnalysisConfig& config,
                         std::string* reasoning) {
  auto say = [&](std::string text) {
    if (reasoning) *reasoning = std::move(text);
  };
  const std::size_t n = returns.size();
  if (n < config.min_points) {
    say("Only " + std::to_string(n) + " evaluation points so far; the curve is too short to judge.");
    return false;
  }
  std::size_t w = std::max<std::size_t>(
      config.min_window, static_cast<std::size_t>(std::ceil(config.window_fraction * n)));
  w = std::min(w, n);
  std::vector<double> window(returns.end() - static_cast<std::ptrdiff_t>(w), returns.end());
  const double change = ols_slope(window) * static_cast<double>(w - 1);
  double mean = 0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(w);
  const auto peak = std::max_element(returns.begin(), returns.end());
  const std::size_t peak_at = static_cast<std::size_t>(peak - returns.begin());

  const bool flat = change < config.slope_fraction * config.y_max;
  const bool level_ok = mean >= config.level_fraction * *peak;
  const bool degenerating = change <= 0 && peak_at + w <= n - 1;

  if (!flat) {
    if (peak_at + w <= n - 1)
      say("Return fell after an earlier peak of " + fmt(*peak) + " but is rising again by " +
          fmt(change) + " over the last " + std::to_string(w) + " points; not converged.");
    else
      say("Return is still rising by " + fmt(change) + " over the last " + std::to_string(w) +
          " points; not converged.");
    return false;
  }
  if (level_ok) {
    say("Return is flat at about " + fmt(mean) + " over the last " + std::to_string(w) +
        " points, close to its best of " + fmt(*peak) + "; converged.");
    return true;
  }
  if (degenerating) {
    say("Return peaked at " + fmt(*peak) + " and has been declining since, now about " +
        fmt(mean) + "; training had already converged.");
    return true;
  }
  say("Return is flat at about " + fmt(mean) + " but well below its best of " + fmt(*peak) +
      "; not converged.");
  return false;
}

ConvergenceJudgment judge_heuristic(const LearningCurve& curve, const AnalysisConfig& config) {
  ConvergenceJudgment j;
  j.caption = curve.caption;
  j.judge = "heuristic";
  j.judged_at = curve.points.empty() ? 0 : curve.points.back().update_count;
  j.converged = heuristic_converged(curve.values(), config, &j.reasoning);
  return j;
}

std::vector<std::uint8_t> render_curve(const LearningCurve& curve, const AnalysisConfig& config) {
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    xs.push_back(static_cast<double>(p.update_count));
    ys.push_back(p.value);
  }
  return plot_series(xs, ys, config.y_max).encode_png();
}

std::optional<bool> parse_yes_no(std::string_view answer) {
  std::string a = normalize_caption(answer);
  if (a == "yes") return true;
  if (a == "no") return false;
  return std::nullopt;
}

ConvergenceJudgment judge_llm(const LearningCurve& curve, Backend& backend,
                              const CallOptions& options, const AnalysisConfig& config,
                              const PromptTemplates& templates) {
  ConvergenceJudgment j;
  j.caption = curve.caption;
  j.judge = std::string(backend.kind());
  j.judged_at = curve.points.empty() ? 0 : curve.points.back().update_count;
  PromptParts parts;
  parts.curve = curve.values();
  parts.curve_png = render_curve(curve, config);
  try {
    auto parsed = parse(backend.complete(assemble(PromptKind::Analysis, parts, templates), options),
                        PromptKind::Analysis);
    auto verdict = parse_yes_no(parsed.answer);
    if (!verdict) throw ParseError("analysis answer is neither YES nor NO: " + parsed.answer);
    j.converged = *verdict;
    j.reasoning = parsed.reasoning;
  } catch (const ParseError& e) {
    j.deferred = true;
    j.reasoning = std::string("deferred: ") + e.what();
  } catch (const TransportError& e) {
    j.deferred = true;
    j.reasoning = std::string("deferred: ") + e.what();
  }
  return j;
}

SweepResult sweep(const std::vector<LearningCurve>& curves, SkillLibrary& library,
                  const Judge& judge) {
  SweepResult result;
  for (const auto& curve : curves) {
    const SkillSpec* skill = library.find(curve.caption);
    if (!skill || skill->converged) continue;
    ConvergenceJudgment j;
    try {
      j = judge(curve);
    } catch (const std::exception& e) {
      j = ConvergenceJudgment{curve.caption, false, true, std::string("deferred: ") + e.what(),
                              curve.points.empty() ? 0 : curve.points.back().update_count,
                              "error"};
    }
    if (j.converged && !j.deferred) {
      library.mark_converged(curve.caption);
      result.stop_signals.push_back(curve.caption);
    }
    result.judgments.push_back(std::move(j));
  }
  return result;
}

std::string judgments_to_ndjson(const std::vector<ConvergenceJudgment>& judgments) {
  std::string out;
  for (const auto& j : judgments)
    out += nlohmann::json{{"caption", j.caption},
                          {"update", j.judged_at},
                          {"converged", j.converged},
                          {"deferred", j.deferred},
                          {"reasoning", j.reasoning},
                          {"judge", j.judge}}
               .dump() +
           '\n';
  return out;
}

void append_judgments(const std::filesystem::path& path,
                      const std::vector<ConvergenceJudgment>& judgments) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot write judgment log " + path.string());
  out << judgments_to_ndjson(judgments);
}

}  // namespace autocurriculum
