#include "autocurriculum/rollout.hpp"

#include <cstdio>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/random.hpp"

namespace autocurriculum {

namespace {

constexpr int kTravel = kGridZ - 1;

Action toward(int from, int to, Action pos, Action neg) { return from < to ? pos : neg; }

Action horizontal(const Cell& from, const Cell& to) {
  if (from.x != to.x) return toward(from.x, to.x, Action::MoveXPos, Action::MoveXNeg);
  return toward(from.y, to.y, Action::MoveYPos, Action::MoveYNeg);
}

bool same_column(const Cell& a, const Cell& b) { return a.x == b.x && a.y == b.y; }

}  // namespace

Action expert_stack_action(const WorldState& s, Color x, Color y) {
  const Cell& tcp = s.tcp;
  if (s.held && *s.held != x) return Action::Open;
  if (s.held) {
    const Cell& base = s.object(y);
    const Cell target{base.x, base.y, base.z + 1};
    if (same_column(tcp, target)) {
      if (tcp.z > target.z) return Action::MoveZNeg;
      if (tcp.z < target.z) return Action::MoveZPos;
      return Action::Open;
    }
    if (tcp.z < kTravel) return Action::MoveZPos;
    return horizontal(tcp, target);
  }
  if (s.supports(y, x)) {
    if (s.aperture_steps < kApertureSteps) return Action::Open;
    if (tcp.z < kTravel) return Action::MoveZPos;
    return Action::Open;  // done; opening a fully open gripper changes nothing
  }
  const Cell& obj = s.object(x);
  if (!same_column(tcp, obj)) {
    if (s.aperture_steps < kApertureSteps) return Action::Open;
    return horizontal(tcp, obj);
  }
  if (tcp.z > obj.z) {
    if (s.aperture_steps < kApertureSteps) return Action::Open;
    return Action::MoveZNeg;
  }
  if (tcp.z < obj.z) return Action::MoveZPos;
  return Action::Close;
}

void PretrainConfig::check() const {
  if (episodes < 0) throw ConfigError("pretraining episode count must be non-negative");
  if (episode_steps < 1) throw ConfigError("pretraining episodes need at least one step");
  if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("epsilon must lie in [0, 1]");
}

std::vector<Episode> generate_pretraining_data(const PretrainConfig& config,
                                               const SkillLibrary& library,
                                               const RewardParams& params) {
  config.check();
  std::vector<std::pair<Color, Color>> pairs;
  for (Color a : kColors)
    for (Color b : kColors)
      if (a != b) pairs.emplace_back(a, b);

  std::vector<Episode> out;
  out.reserve(static_cast<std::size_t>(config.episodes));
  for (int i = 0; i < config.episodes; ++i) {
    const auto [x, y] = pairs[static_cast<std::size_t>(i) % pairs.size()];
    Episode ep;
    char id[32];
    std::snprintf(id, sizeof id, "pre-%06d", i);
    ep.id = id;
    ep.seed = derive_seed(config.seed, {0x9e7ULL, static_cast<std::uint64_t>(i)});
    ep.source = EpisodeSource::Pretraining;
    Rng rng(derive_seed(ep.seed, {1}));
    WorldState s = reset(ep.seed);
    ep.states.push_back(s);
    for (int t = 0; t < config.episode_steps; ++t) {
      Action a = expert_stack_action(s, x, y);
      if (config.epsilon > 0 && uniform_unit(rng) < config.epsilon)
        a = static_cast<Action>(uniform_index(rng, kNumActions));
      s = step(s, a);
      ep.actions.push_back(a);
      ep.states.push_back(s);
    }
    const std::string caption =
        "stack " + std::string(color_name(x)) + " on " + std::string(color_name(y));
    ep.segments.push_back({caption, 0, ep.length()});
    ep = relabel(std::move(ep), library, params);
    if (ep.channel(caption)) ep.success = judge_success(ep, {caption}).success;
    out.push_back(std::move(ep));
  }
  return out;
}

Episode execute_plan(const Policy& policy, const std::vector<std::string>& captions,
                     const WorldState& start, int segment_steps, double epsilon, Rng& rng,
                     const SkillLibrary& library, const RewardParams& params) {
  if (segment_steps < 1) throw ConfigError("segment_steps must be positive");
  for (const auto& c : captions)
    if (!policy.has(c)) throw UnknownSkillError("policy cannot execute '" + c + "'");
  Episode ep;
  ep.states.push_back(start);
  WorldState s = start;
  for (const auto& caption : captions) {
    const std::size_t begin = ep.length();
    for (int t = 0; t < segment_steps; ++t) {
      Action a = act(policy, s, caption, epsilon, rng);
      s = step(s, a);
      ep.actions.push_back(a);
      ep.states.push_back(s);
    }
    ep.segments.push_back({caption, begin, ep.length()});
  }
  return relabel(std::move(ep), library, params);
}

}  // namespace autocurriculum
