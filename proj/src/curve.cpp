#include "autocurriculum/curve.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "autocurriculum/errors.hpp"

namespace autocurriculum {

using nlohmann::json;

std::vector<double> LearningCurve::values() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.value);
  return out;
}

LearningCurve LearningCurve::truncated(std::uint64_t at) const {
  LearningCurve out{caption, {}};
  for (const auto& p : points)
    if (p.update_count <= at) out.points.push_back(p);
  return out;
}

std::optional<std::string> LearningCurve::check() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0 && points[i].update_count <= points[i - 1].update_count)
      return "curve " + caption + ": update counts must increase";
    if (!(points[i].value >= 0 && points[i].value <= kMaxReturn))
      return "curve " + caption + ": return outside [0, 400]";
  }
  return std::nullopt;
}

std::string curves_to_ndjson(const std::vector<LearningCurve>& curves) {
  std::string out;
  for (const auto& c : curves) {
    if (c.points.empty()) {
      out += json{{"caption", c.caption}}.dump() + '\n';
      continue;
    }
    for (const auto& p : c.points)
      out += json{{"caption", c.caption}, {"update", p.update_count}, {"return", p.value}}.dump() +
             '\n';
  }
  return out;
}

std::vector<LearningCurve> curves_from_ndjson(std::string_view text) {
  std::vector<LearningCurve> curves;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      std::string caption = rec.at("caption").get<std::string>();
      LearningCurve* curve = nullptr;
      for (auto& c : curves)
        if (c.caption == caption) curve = &c;
      if (!curve) curve = &curves.emplace_back(LearningCurve{caption, {}});
      if (rec.contains("update"))
        curve->points.push_back({rec.at("update").get<std::uint64_t>(), rec.at("return").get<double>()});
    } catch (const json::exception& e) {
      throw DataError("curve log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (const auto& c : curves)
    if (auto err = c.check()) throw DataError(*err);
  return curves;
}

void save_curves(const std::filesystem::path& path, const std::vector<LearningCurve>& curves) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write curve log " + path.string());
  out << curves_to_ndjson(curves);
}

std::vector<LearningCurve> load_curves(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read curve log " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return curves_from_ndjson(buf.str());
}

}  // namespace autocurriculum
