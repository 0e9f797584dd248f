#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "autocurriculum/diversity.hpp"
#include "autocurriculum/errors.hpp"
#include "autocurriculum/random.hpp"

using namespace autocurriculum;

namespace {

double norm(const Vector& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<Vector> cloud(std::uint64_t seed, std::size_t n, std::size_t dims) {
  Rng rng(seed);
  std::vector<Vector> out(n, Vector(dims));
  for (auto& v : out)
    for (auto& x : v) x = uniform_unit(rng);
  return out;
}

std::vector<DiversitySample> samples(std::uint64_t seed, const std::vector<std::string>& captions) {
  std::vector<DiversitySample> out;
  for (std::size_t i = 0; i < 40; ++i) {
    Rng rng(seed + i);
    WorldState s = reset(seed + i);
    for (int t = 0; t < 30; ++t) s = step(s, static_cast<Action>(uniform_index(rng, kNumActions)));
    out.push_back({s, captions[i % captions.size()]});
  }
  return out;
}

}  // namespace

TEST_CASE("embeddings have unit norm") {
  ProprioStats stats = fit_proprio_stats({reset(0), reset(1), reset(2)});
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    WorldState s = reset(seed);
    CHECK(norm(embed_scene(s).v) == doctest::Approx(1.0));
    CHECK(norm(embed_proprio(s, stats).v) == doctest::Approx(1.0));
  }
  for (const char* c : {"reach red", "stack blue on green", "x"})
    CHECK(norm(embed_language(c).v) == doctest::Approx(1.0));
  CHECK(embed_language("reach red").v.size() == kLanguageDims);
  Embedding zero = unit_normalized(Vector(4, 0.0));
  CHECK(zero.degenerate);
  CHECK(zero.v == Vector{1, 0, 0, 0});
}

TEST_CASE("language embedding depends on the caption only up to case") {
  CHECK(embed_language("Reach Red").v == embed_language("reach red").v);
  CHECK(l2(embed_language("reach red").v, embed_language("reach blue").v) > 0);
  CHECK(l2(embed_language("reach red").v, embed_language("reach blue").v) <
        l2(embed_language("reach red").v, embed_language("build an inverted pyramid").v));
}

TEST_CASE("pairwise distance is order independent") {
  auto pts = cloud(3, 60, 4);
  double base = mean_pairwise_l2(pts, 1);
  std::reverse(pts.begin(), pts.end());
  CHECK(mean_pairwise_l2(pts, 1) == base);
  std::rotate(pts.begin(), pts.begin() + 17, pts.end());
  CHECK(mean_pairwise_l2(pts, 1) == base);
  CHECK(mean_pairwise_l2({{0, 0}, {3, 4}}, 0) == doctest::Approx(5.0));

  // Sampled pairs stay order independent too.
  auto many = cloud(5, 600, 3);
  double sampled = mean_pairwise_l2(many, 2, 1000);
  std::reverse(many.begin(), many.end());
  CHECK(mean_pairwise_l2(many, 2, 1000) == sampled);
  CHECK(sampled == doctest::Approx(mean_pairwise_l2(many, 2)).epsilon(0.05));
}

TEST_CASE("k-means is order independent and finds separated clusters") {
  std::vector<Vector> pts;
  for (double cx : {0.0, 10.0, 20.0})
    for (int i = 0; i < 10; ++i) pts.push_back({cx + 0.01 * i, 0.0});
  KMeans a = fit_kmeans(pts, 3, 4);
  std::reverse(pts.begin(), pts.end());
  KMeans b = fit_kmeans(pts, 3, 4);
  CHECK(a.centroids == b.centroids);
  std::vector<double> xs;
  for (const auto& c : a.centroids) xs.push_back(c[0]);
  std::sort(xs.begin(), xs.end());
  CHECK(xs[0] == doctest::Approx(0.045));
  CHECK(xs[1] == doctest::Approx(10.045));
  CHECK(xs[2] == doctest::Approx(20.045));
  CHECK(mean_centroid_distance(pts, a) < 0.05);
}

TEST_CASE("k-means needs k distinct points") {
  std::vector<Vector> pts(10, Vector{1.0, 2.0});
  pts.push_back({3.0, 3.0});
  CHECK_THROWS_AS(fit_kmeans(pts, 3, 0), DataError);
  CHECK_NOTHROW(fit_kmeans(pts, 2, 0));
}

TEST_CASE("diversity samples come from segment ends") {
  Episode e;
  e.states.push_back(reset(1));
  for (int t = 0; t < 6; ++t) {
    e.actions.push_back(Action::MoveXPos);
    e.states.push_back(step(e.states.back(), Action::MoveXPos));
  }
  e.segments = {{"reach red", 0, 2}, {"lift red", 2, 6}};
  auto s = diversity_samples({e});
  REQUIRE(s.size() == 2);
  CHECK(s[0].caption == "reach red");
  CHECK(s[0].state == e.states[2]);
  CHECK(s[1].state == e.states[6]);
}

TEST_CASE("diversity report scores varied captions above one caption family") {
  auto narrow = samples(0, {"stack red on green", "stack red on blue", "stack green on red",
                            "stack green on blue", "stack blue on red", "stack blue on green"});
  auto wide = samples(500, {"reach red", "lift blue", "stack green on blue", "open gripper",
                            "build a pyramid with red on top and green and blue at the bottom"});
  DiversityReport r = diversity_report(narrow, wide, 7);
  CHECK(r.k == 5);
  REQUIRE(r.rows.size() == 3);
  const auto& lang = r.row(Modality::Language);
  CHECK(lang.comparison.pairwise_l2 > lang.baseline.pairwise_l2);
  CHECK(lang.baseline.points == 40);
  auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.is_object());
  CHECK(r.to_table("pretraining", "guided").find("language") != std::string::npos);
}
