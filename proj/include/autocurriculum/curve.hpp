#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace autocurriculum {

inline constexpr double kMaxReturn = 400.0;

struct CurvePoint {
  std::uint64_t update_count = 0;
  double value = 0;
  bool operator==(const CurvePoint&) const = default;
};

/// Evaluation returns of one skill over learner updates.
struct LearningCurve {
  std::string caption;
  std::vector<CurvePoint> points;

  bool operator==(const LearningCurve&) const = default;

  std::vector<double> values() const;
  /// Prefix with update_count <= `at`.
  LearningCurve truncated(std::uint64_t at) const;
  /// Strictly increasing update counts and values within [0, 400].
  std::optional<std::string> check() const;
};

/// One NDJSON record per (caption, update_count, return), curves in order.
std::string curves_to_ndjson(const std::vector<LearningCurve>& curves);
std::vector<LearningCurve> curves_from_ndjson(std::string_view text);
void save_curves(const std::filesystem::path& path, const std::vector<LearningCurve>& curves);
std::vector<LearningCurve> load_curves(const std::filesystem::path& path);

}  // namespace autocurriculum
