#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autocurriculum/episode.hpp"
#include "autocurriculum/learner.hpp"
#include "autocurriculum/random.hpp"
#include "autocurriculum/reward.hpp"
#include "autocurriculum/skills.hpp"

namespace autocurriculum {

// ---- episode shards ---------------------------------------------------------
//
// A shard is one NDJSON file: a header record naming the format version and
// the library the episodes were collected under, then one record per episode.
// Reward channels are not stored; they are recomputed from the states on load.

inline constexpr int kShardVersion = 1;

std::string encode_episode(const Episode& episode);
/// Throws DataError on malformed records. Channels come back empty.
Episode decode_episode(std::string_view line);

/// Appends to one shard, creating it with a header when it does not exist.
/// Every append is flushed, so a crash can cost at most the last record.
class EpisodeWriter {
 public:
  EpisodeWriter(std::filesystem::path path, const SkillLibrary& library);
  void append(const Episode& episode);
  const std::filesystem::path& path() const { return path_; }
  std::size_t appended() const { return appended_; }

 private:
  std::filesystem::path path_;
  std::size_t appended_ = 0;
};

struct EpisodeFilter {
  std::optional<EpisodeSource> source;
  std::optional<std::string> skill;  // some segment executed this caption
  std::optional<bool> success;

  bool matches(const Episode& e) const;
};

struct LoadResult {
  std::vector<Episode> episodes;
  std::size_t corrupt = 0;  // unreadable records skipped
  SkillLibrary library;     // union of the shard headers, first-seen order
};

/// `path` is a shard or a directory of *.ndjson shards read in name order.
/// Loaded episodes carry a channel for every skill of their shard's library.
LoadResult load_episodes(const std::filesystem::path& path, const EpisodeFilter& filter = {},
                         const RewardParams& params = {});
std::vector<std::filesystem::path> list_shards(const std::filesystem::path& path);

// ---- dataset mixing -----------------------------------------------------------

struct Dataset {
  std::string name;
  std::vector<Episode> episodes;
};

/// Per-dataset batch shares and, inside every dataset, the fraction of draws
/// reserved for segments of up-weighted captions.
struct SamplerConfig {
  std::vector<double> shares{0.5, 0.5};
  std::vector<std::string> upweighted;
  double upweight_fraction = 0.5;

  void check(std::size_t datasets) const;
};

struct TransitionRef {
  std::size_t dataset = 0;
  std::size_t episode = 0;
  std::size_t step = 0;
  bool operator==(const TransitionRef&) const = default;
};

/// Endless deterministic stream of transitions following SamplerConfig.
class MixedSampler {
 public:
  MixedSampler(const std::vector<const Dataset*>& datasets, SamplerConfig config,
               std::uint64_t seed);
  TransitionRef next();

 private:
  struct Pool {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> steps;  // (episode, step)
  };
  struct Source {
    Pool up, rest;
  };
  std::vector<Source> sources_;
  std::vector<double> cumulative_;
  SamplerConfig config_;
  Rng rng_;
};

/// Probability that one sampler draw lands on each step, laid out as
/// [dataset][episode][step]. These are the transition weights for fit.
std::vector<std::vector<std::vector<double>>> inclusion_weights(
    const std::vector<const Dataset*>& datasets, const SamplerConfig& config);

/// All episodes with their inclusion weights, ready for fit.
WeightedEpisodes weighted_union(const std::vector<const Dataset*>& datasets,
                                const SamplerConfig& config);

}  // namespace autocurriculum
