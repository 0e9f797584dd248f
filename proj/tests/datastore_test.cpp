#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "autocurriculum/datastore.hpp"
#include "autocurriculum/errors.hpp"

using namespace autocurriculum;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Episode make_episode(std::uint64_t seed, const std::vector<std::string>& captions, int steps,
                     EpisodeSource source = EpisodeSource::Pretraining, bool success = false) {
  Rng rng(seed);
  Episode e;
  e.id = "e" + std::to_string(seed);
  e.seed = seed;
  e.source = source;
  e.success = success;
  e.states.push_back(reset(seed));
  for (const auto& c : captions) {
    std::size_t start = e.actions.size();
    for (int t = 0; t < steps; ++t) {
      auto a = static_cast<Action>(uniform_index(rng, kNumActions));
      e.actions.push_back(a);
      e.states.push_back(step(e.states.back(), a));
    }
    e.segments.push_back({c, start, e.actions.size()});
  }
  return e;
}

Episode without_channels(Episode e) {
  e.channels.clear();
  return e;
}

}  // namespace

TEST_CASE("episode records round-trip without channels") {
  SkillLibrary lib = base_library();
  Episode e = relabel(make_episode(4, {"reach red", "lift red"}, 7, EpisodeSource::Round2, true),
                      lib);
  e.note = "with \"quotes\"";
  Episode back = decode_episode(encode_episode(e));
  CHECK(back == without_channels(e));
  CHECK_THROWS_AS(decode_episode("{not json"), DataError);
  CHECK_THROWS_AS(decode_episode("{\"id\":\"x\"}"), DataError);
}

TEST_CASE("shards reload with recomputed channels and skip a torn tail") {
  TempDir dir("ac_datastore_shards");
  SkillLibrary lib = base_library();
  std::vector<Episode> written;
  {
    EpisodeWriter w(dir.path / "a.ndjson", lib);
    for (std::uint64_t s = 0; s < 5; ++s) {
      written.push_back(make_episode(s, {"reach red"}, 5));
      w.append(written.back());
    }
    CHECK(w.appended() == 5);
  }
  {
    EpisodeWriter w(dir.path / "b.ndjson", lib);
    written.push_back(make_episode(9, {"open gripper", "lift green"}, 4));
    w.append(written.back());
  }
  LoadResult all = load_episodes(dir.path);
  CHECK(all.corrupt == 0);
  REQUIRE(all.episodes.size() == 6);
  CHECK(all.library == lib);
  for (std::size_t i = 0; i < written.size(); ++i) {
    CHECK(all.episodes[i] == relabel(written[i], lib));
    CHECK(all.episodes[i].channels.size() == lib.size());
  }

  // Tear the last record of the first shard in half.
  fs::path a = dir.path / "a.ndjson";
  fs::resize_file(a, fs::file_size(a) - 40);
  LoadResult torn = load_episodes(dir.path);
  CHECK(torn.corrupt == 1);
  CHECK(torn.episodes.size() == 5);

  CHECK(list_shards(dir.path) == std::vector<fs::path>{a, dir.path / "b.ndjson"});
  CHECK(load_episodes(dir.path / "b.ndjson").episodes.size() == 1);
}

TEST_CASE("appending to an existing shard keeps one header") {
  TempDir dir("ac_datastore_append");
  SkillLibrary lib = base_library();
  fs::path p = dir.path / "w.ndjson";
  EpisodeWriter(p, lib).append(make_episode(1, {"reach red"}, 3));
  EpisodeWriter(p, lib).append(make_episode(2, {"reach red"}, 3));
  CHECK(load_episodes(p).episodes.size() == 2);
  std::ifstream in(p);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("filters select by source, skill and outcome") {
  std::vector<Episode> eps{
      make_episode(1, {"reach red"}, 2, EpisodeSource::Pretraining, false),
      make_episode(2, {"reach red", "lift red"}, 2, EpisodeSource::SelfImprovement, true),
      make_episode(3, {"lift red"}, 2, EpisodeSource::SelfImprovement, false),
  };
  auto count = [&](const EpisodeFilter& f) {
    int n = 0;
    for (const auto& e : eps) n += f.matches(e);
    return n;
  };
  CHECK(count({}) == 3);
  CHECK(count({EpisodeSource::SelfImprovement, {}, {}}) == 2);
  CHECK(count({{}, std::string("lift red"), {}}) == 2);
  CHECK(count({{}, {}, true}) == 1);
  CHECK(count({EpisodeSource::SelfImprovement, std::string("lift red"), false}) == 1);
}

TEST_CASE("sampler follows dataset shares and up-weighting within 2%") {
  Dataset base{"pretraining", {}}, guided{"guided", {}};
  for (std::uint64_t s = 0; s < 40; ++s) base.episodes.push_back(make_episode(s, {"reach red"}, 10));
  for (std::uint64_t s = 0; s < 10; ++s)
    guided.episodes.push_back(make_episode(100 + s, {"reach red", "stack red on green"}, 5));
  guided.episodes.push_back(make_episode(200, {"lift red"}, 30));

  SamplerConfig cfg;
  cfg.shares = {0.3, 0.7};
  cfg.upweighted = {"stack red on green"};
  cfg.upweight_fraction = 0.5;
  MixedSampler sampler({&base, &guided}, cfg, 11);
  const int n = 100000;
  int from_guided = 0, up = 0;
  for (int i = 0; i < n; ++i) {
    TransitionRef r = sampler.next();
    if (r.dataset == 1) {
      ++from_guided;
      const Episode& e = guided.episodes[r.episode];
      for (const auto& seg : e.segments)
        if (r.step >= seg.start && r.step < seg.end && seg.caption == "stack red on green") ++up;
    }
  }
  CHECK(std::abs(from_guided / double(n) - 0.7) < 0.02);
  CHECK(std::abs(up / double(from_guided) - 0.5) < 0.02);

  MixedSampler again({&base, &guided}, cfg, 11), other({&base, &guided}, cfg, 12);
  MixedSampler first({&base, &guided}, cfg, 11);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    TransitionRef r = first.next();
    CHECK(r == again.next());
    differs = differs || !(r == other.next());
  }
  CHECK(differs);
}

TEST_CASE("inclusion weights give each dataset its share") {
  Dataset base{"pretraining", {}}, guided{"guided", {}};
  for (std::uint64_t s = 0; s < 6; ++s) base.episodes.push_back(make_episode(s, {"reach red"}, 4));
  for (std::uint64_t s = 0; s < 3; ++s)
    guided.episodes.push_back(make_episode(10 + s, {"lift red", "stack red on green"}, 3));
  SamplerConfig cfg;
  cfg.upweighted = {"stack red on green"};
  auto w = inclusion_weights({&base, &guided}, cfg);
  auto sum = [](const std::vector<std::vector<double>>& d) {
    double s = 0;
    for (const auto& e : d)
      for (double x : e) s += x;
    return s;
  };
  CHECK(sum(w[0]) == doctest::Approx(0.5));
  CHECK(sum(w[1]) == doctest::Approx(0.5));
  CHECK(w[1][0][0] == doctest::Approx(0.25 / 9));
  CHECK(w[1][0][5] == doctest::Approx(0.25 / 9));
  CHECK(w[0][0][0] == doctest::Approx(0.5 / 24));

  WeightedEpisodes u = weighted_union({&base, &guided}, cfg);
  CHECK(u.episodes.size() == 9);
  CHECK(u.step_weights.size() == 9);
  CHECK(u.episodes[6] == &guided.episodes[0]);
}

TEST_CASE("sampler configuration checks") {
  SamplerConfig cfg;
  CHECK_THROWS_AS(cfg.check(3), ConfigError);
  cfg.shares = {0.6, 0.6};
  CHECK_THROWS_AS(cfg.check(2), ConfigError);
  cfg.shares = {1.0};
  cfg.upweight_fraction = 1.0;
  CHECK_THROWS_AS(cfg.check(1), ConfigError);
  Dataset empty{"empty", {}};
  CHECK_THROWS(MixedSampler({&empty}, SamplerConfig{{1.0}, {}, 0.5}, 0));
}
