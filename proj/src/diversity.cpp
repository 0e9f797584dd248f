#include "autocurriculum/diversity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/random.hpp"

namespace autocurriculum {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Proprioception: return "proprioception";
    case Modality::Scene: return "scene";
    case Modality::Language: return "language";
  }
  return "?";
}

Embedding unit_normalized(Vector v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0) {
    if (v.empty()) v.resize(1);
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1;
    return {std::move(v), true};
  }
  for (double& x : v) x /= n;
  return {std::move(v), false};
}

std::array<double, kProprioDims> proprio_features(const WorldState& s) {
  const Vec3 p = s.tcp_position();
  return {p.x, p.y, p.z, s.aperture(), s.grasp_sensor ? 1.0 : 0.0};
}

ProprioStats fit_proprio_stats(const std::vector<WorldState>& baseline) {
  ProprioStats st;
  if (baseline.empty()) return st;
  const double n = static_cast<double>(baseline.size());
  for (const auto& s : baseline) {
    auto f = proprio_features(s);
    for (int i = 0; i < kProprioDims; ++i) st.mean[i] += f[i] / n;
  }
  std::array<double, kProprioDims> var{};
  for (const auto& s : baseline) {
    auto f = proprio_features(s);
    for (int i = 0; i < kProprioDims; ++i) var[i] += (f[i] - st.mean[i]) * (f[i] - st.mean[i]) / n;
  }
  for (int i = 0; i < kProprioDims; ++i) st.spread[i] = var[i] > 0 ? std::sqrt(var[i]) : 1.0;
  return st;
}

Embedding embed_proprio(const WorldState& s, const ProprioStats& stats) {
  auto f = proprio_features(s);
  Vector v(kProprioDims);
  for (int i = 0; i < kProprioDims; ++i) v[i] = (f[i] - stats.mean[i]) / stats.spread[i];
  return unit_normalized(std::move(v));
}

Embedding embed_scene(const WorldState& s) {
  Vector v;
  auto push = [&](const Cell& c) {
    v.push_back(2.0 * c.x / (kGridXY - 1) - 1);
    v.push_back(2.0 * c.y / (kGridXY - 1) - 1);
    v.push_back(2.0 * c.z / (kGridZ - 1) - 1);
  };
  for (const Cell& c : s.objects) push(c);
  push(s.tcp);
  return unit_normalized(std::move(v));
}

Embedding embed_language(std::string_view caption) {
  std::string text = " ";
  for (char c : caption) text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  text.push_back(' ');
  Vector v(kLanguageDims, 0.0);
  for (std::size_t i = 0; i + 3 <= text.size(); ++i)
    v[fnv1a64(std::string_view(text).substr(i, 3)) % kLanguageDims] += 1;
  return unit_normalized(std::move(v));
}

std::vector<DiversitySample> diversity_samples(const std::vector<Episode>& episodes) {
  std::vector<DiversitySample> out;
  for (const auto& e : episodes)
    for (const auto& seg : e.segments) out.push_back({e.states.at(seg.end), seg.caption});
  return out;
}

double l2(const Vector& a, const Vector& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d);
}

namespace {

std::size_t nearest(const Vector& p, const std::vector<Vector>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    double d = l2(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeans fit_kmeans(std::vector<Vector> points, int k, std::uint64_t seed, int max_iterations) {
  if (k < 1) throw ConfigError("k-means needs k >= 1");
  std::sort(points.begin(), points.end());
  std::vector<Vector> uniq = points;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < static_cast<std::size_t>(k))
    throw DataError("k-means needs at least " + std::to_string(k) + " distinct points, got " +
                    std::to_string(uniq.size()));

  Rng rng(derive_seed(seed, {0xc1a5ULL}));
  KMeans model;
  model.centroids.push_back(uniq[uniform_index(rng, uniq.size())]);
  std::vector<double> dist(uniq.size(), std::numeric_limits<double>::infinity());
  while (model.centroids.size() < static_cast<std::size_t>(k)) {
    std::size_t far = 0;
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      dist[i] = std::min(dist[i], l2(uniq[i], model.centroids.back()));
      if (dist[i] > dist[far]) far = i;
    }
    model.centroids.push_back(uniq[far]);
  }

  std::vector<std::size_t> assign(points.size(), k);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t c = nearest(points[i], model.centroids);
      changed = changed || c != assign[i];
      assign[i] = c;
    }
    model.iterations = it + 1;
    if (!changed) break;
    const std::size_t dims = points.front().size();
    std::vector<Vector> sums(static_cast<std::size_t>(k), Vector(dims, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (std::size_t j = 0; j < dims; ++j) sums[assign[i]][j] += points[i][j];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < sums.size(); ++c) {
      if (counts[c] == 0) continue;  // an empty cluster keeps its centroid
      for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
      model.centroids[c] = std::move(sums[c]);
    }
  }
  return model;
}

double mean_pairwise_l2(std::vector<Vector> points, std::uint64_t seed, std::size_t max_pairs) {
  const std::size_t n = points.size();
  if (n < 2) return 0;
  std::sort(points.begin(), points.end());
  const std::size_t all = n * (n - 1) / 2;
  double sum = 0;
  if (all <= max_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) sum += l2(points[i], points[j]);
    return sum / static_cast<double>(all);
  }
  Rng rng(derive_seed(seed, {0x9a125ULL}));
  for (std::size_t p = 0; p < max_pairs; ++p) {
    std::size_t i = uniform_index(rng, n);
    std::size_t j = uniform_index(rng, n - 1);
    if (j >= i) ++j;
    sum += l2(points[i], points[j]);
  }
  return sum / static_cast<double>(max_pairs);
}

double mean_centroid_distance(const std::vector<Vector>& points, const KMeans& model) {
  if (points.empty()) return 0;
  double sum = 0;
  for (const auto& p : points) sum += l2(p, model.centroids[nearest(p, model.centroids)]);
  return sum / static_cast<double>(points.size());
}

const DiversityRow& DiversityReport::row(Modality m) const {
  for (const auto& r : rows)
    if (r.modality == m) return r;
  throw DataError("diversity report has no row for " + std::string(modality_name(m)));
}

std::string DiversityReport::to_json() const {
  nlohmann::json j{{"k", k}, {"modalities", nlohmann::json::array()}};
  auto set = [](const SetMetrics& m) {
    return nlohmann::json{{"pairwise_l2", m.pairwise_l2},
                          {"centroid_distance", m.centroid_distance},
                          {"points", m.points}};
  };
  for (const auto& r : rows)
    j["modalities"].push_back({{"modality", modality_name(r.modality)},
                               {"baseline", set(r.baseline)},
                               {"comparison", set(r.comparison)}});
  return j.dump(2) + "\n";
}

std::string DiversityReport::to_table(std::string_view baseline_name,
                                      std::string_view comparison_name) const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %-20s %12s %12s %8s\n", "modality", "set", "pairwise_l2",
                "cluster_dist", "points");
  out += line;
  for (const auto& r : rows)
    for (const auto& [name, m] : {std::pair{baseline_name, r.baseline}, {comparison_name, r.comparison}}) {
      std::snprintf(line, sizeof line, "%-16s %-20.*s %12.4f %12.4f %8zu\n",
                    std::string(modality_name(r.modality)).c_str(), static_cast<int>(name.size()),
                    name.data(), m.pairwise_l2, m.centroid_distance, m.points);
      out += line;
    }
  return out;
}

DiversityReport diversity_report(const std::vector<DiversitySample>& baseline,
                                 const std::vector<DiversitySample>& comparison,
                                 std::uint64_t seed) {
  std::vector<WorldState> base_states;
  for (const auto& s : baseline) base_states.push_back(s.state);
  const ProprioStats stats = fit_proprio_stats(base_states);

  DiversityReport report;
  for (Modality m : {Modality::Proprioception, Modality::Scene, Modality::Language}) {
    auto embed_all = [&](const std::vector<DiversitySample>& set) {
      std::vector<Vector> out;
      out.reserve(set.size());
      for (const auto& s : set) {
        switch (m) {
          case Modality::Proprioception: out.push_back(embed_proprio(s.state, stats).v); break;
          case Modality::Scene: out.push_back(embed_scene(s.state).v); break;
          case Modality::Language: out.push_back(embed_language(s.caption).v); break;
        }
      }
      return out;
    };
    const auto b = embed_all(baseline);
    const auto c = embed_all(comparison);
    const KMeans model = fit_kmeans(b, report.k, derive_seed(seed, {static_cast<std::uint64_t>(m)}));
    DiversityRow row{m, {}, {}};
    row.baseline = {mean_pairwise_l2(b, seed), mean_centroid_distance(b, model), b.size()};
    row.comparison = {mean_pairwise_l2(c, seed), mean_centroid_distance(c, model), c.size()};
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace autocurriculum
