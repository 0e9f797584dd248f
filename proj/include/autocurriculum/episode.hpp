#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autocurriculum/world.hpp"

namespace autocurriculum {

enum class EpisodeSource : std::uint8_t { Pretraining, SelfImprovement, Round2 };

std::string_view source_name(EpisodeSource s);
std::optional<EpisodeSource> parse_source(std::string_view name);

/// A contiguous run of steps during which one skill caption was executed.
struct Segment {
  std::string caption;
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  bool operator==(const Segment&) const = default;
};

/// Per-step rewards of one skill; values[t] is the reward observed after
/// action t, i.e. evaluated on states[t + 1].
struct RewardChannel {
  std::string caption;
  std::string reward_id;
  std::vector<double> values;
  bool operator==(const RewardChannel&) const = default;
};

struct Episode {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<WorldState> states;  // length() + 1 snapshots
  std::vector<Action> actions;
  std::vector<RewardChannel> channels;
  std::vector<Segment> segments;
  bool success = false;
  EpisodeSource source = EpisodeSource::Pretraining;
  std::string note;

  bool operator==(const Episode&) const = default;

  std::size_t length() const { return actions.size(); }
  const RewardChannel* channel(std::string_view caption) const;

  /// Segment partition, state count and channel shapes.
  std::optional<std::string> check() const;
};

}  // namespace autocurriculum
