#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "autocurriculum/episode.hpp"
#include "autocurriculum/world.hpp"

namespace autocurriculum {

enum class Modality : std::uint8_t { Proprioception, Scene, Language };
std::string_view modality_name(Modality m);

using Vector = std::vector<double>;

/// Unit-norm vector. A zero input maps to the first basis vector with
/// `degenerate` set.
struct Embedding {
  Vector v;
  bool degenerate = false;
};

Embedding unit_normalized(Vector v);

inline constexpr int kProprioDims = 5;  // tcp x, y, z (m), aperture, grasp sensor
inline constexpr int kLanguageDims = 256;

/// Per-dimension z-score statistics; a zero spread is treated as one.
struct ProprioStats {
  std::array<double, kProprioDims> mean{};
  std::array<double, kProprioDims> spread{1, 1, 1, 1, 1};
};

std::array<double, kProprioDims> proprio_features(const WorldState& s);
ProprioStats fit_proprio_stats(const std::vector<WorldState>& baseline);

Embedding embed_proprio(const WorldState& s, const ProprioStats& stats);
/// Object and gripper cells scaled to [-1, 1] per axis, flattened.
Embedding embed_scene(const WorldState& s);
/// Hashed character 3-gram counts of the lowercased, space-padded caption.
Embedding embed_language(std::string_view caption);

/// One point per executed segment: the state where it ended and its caption.
struct DiversitySample {
  WorldState state;
  std::string caption;
};
std::vector<DiversitySample> diversity_samples(const std::vector<Episode>& episodes);

struct KMeans {
  std::vector<Vector> centroids;
  int iterations = 0;
};

/// Lloyd's algorithm from a seeded farthest-point start. Input order does not
/// matter: points are sorted before seeding. Throws DataError when fewer than
/// `k` distinct points exist.
KMeans fit_kmeans(std::vector<Vector> points, int k, std::uint64_t seed, int max_iterations = 100);

double l2(const Vector& a, const Vector& b);
/// Mean distance over all pairs, or over `max_pairs` seeded random pairs when
/// there are more. Order independent.
double mean_pairwise_l2(std::vector<Vector> points, std::uint64_t seed,
                        std::size_t max_pairs = 100000);
double mean_centroid_distance(const std::vector<Vector>& points, const KMeans& model);

struct SetMetrics {
  double pairwise_l2 = 0;
  double centroid_distance = 0;
  std::size_t points = 0;
};

struct DiversityRow {
  Modality modality = Modality::Language;
  SetMetrics baseline, comparison;
};

struct DiversityReport {
  int k = 5;
  std::vector<DiversityRow> rows;  // proprioception, scene, language

  const DiversityRow& row(Modality m) const;
  std::string to_json() const;
  std::string to_table(std::string_view baseline_name, std::string_view comparison_name) const;
};

/// k-means (k = 5) and proprioception statistics are fit on the baseline;
/// both sets are scored against them.
DiversityReport diversity_report(const std::vector<DiversitySample>& baseline,
                                 const std::vector<DiversitySample>& comparison,
                                 std::uint64_t seed);

}  // namespace autocurriculum
