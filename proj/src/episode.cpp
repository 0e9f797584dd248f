#include "autocurriculum/episode.hpp"

namespace autocurriculum {

std::string_view source_name(EpisodeSource s) {
  switch (s) {
    case EpisodeSource::Pretraining: return "pretraining";
    case EpisodeSource::SelfImprovement: return "self-improvement";
    case EpisodeSource::Round2: return "round2";
  }
  return "?";
}

std::optional<EpisodeSource> parse_source(std::string_view name) {
  for (auto s : {EpisodeSource::Pretraining, EpisodeSource::SelfImprovement, EpisodeSource::Round2})
    if (source_name(s) == name) return s;
  return std::nullopt;
}

const RewardChannel* Episode::channel(std::string_view caption) const {
  for (const auto& c : channels)
    if (c.caption == caption) return &c;
  return nullptr;
}

std::optional<std::string> Episode::check() const {
  if (states.size() != actions.size() + 1) return "states must hold length()+1 snapshots";
  std::size_t cursor = 0;
  for (const auto& seg : segments) {
    if (seg.start != cursor || seg.end <= seg.start) return "segments do not partition the episode";
    cursor = seg.end;
  }
  if (!segments.empty() && cursor != length()) return "segments do not cover the episode";
  for (const auto& ch : channels)
    if (ch.values.size() != length()) return "channel " + ch.caption + " has the wrong length";
  return std::nullopt;
}

}  // namespace autocurriculum
