#include "autocurriculum/abstraction.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

#include "autocurriculum/errors.hpp"

namespace autocurriculum {

namespace {

class KeyWriter {
 public:
  void put(std::uint64_t value, int bits) {
    key_ |= (value & ((1ULL << bits) - 1)) << used_;
    used_ += bits;
  }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  int used_ = 0;
};

// The packed fields use at most 53 bits; the level lives in the top bits.
std::uint64_t level_tag(int level) { return static_cast<std::uint64_t>(level) << 60; }

int clamp_offset(int d, int limit) { return std::clamp(d, -limit, limit) + limit; }

bool covered(const WorldState& s, Color c) { return s.resting_on(c).has_value(); }

// Topmost object closest to the gripper; ties go to the lower color index.
Color nearest_graspable(const WorldState& s) {
  Color best = Color::Red;
  int best_d = 1 << 30;
  for (Color c : kColors) {
    if (covered(s, c)) continue;
    const Cell& o = s.object(c);
    int d = std::abs(o.x - s.tcp.x) + std::abs(o.y - s.tcp.y) + std::abs(o.z - s.tcp.z);
    if (d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

void AbstractionConfig::check() const {
  if (xy_clamps.empty() || xy_clamps.size() > 4)
    throw ConfigError("the abstraction needs one to four xy_clamps levels");
  for (int c : xy_clamps)
    if (c < 1 || c > 7) throw ConfigError("xy_clamps entries must lie in [1, 7]");
  if (z_clamp < 1 || z_clamp > 4) throw ConfigError("z_clamp must lie in [1, 4]");
}

std::uint64_t abstract_key(const WorldState& state, const RewardId& skill,
                           const AbstractionConfig& config, int level) {
  const int xy_clamp = config.xy_clamps.at(static_cast<std::size_t>(level));
  KeyWriter w;
  w.put(static_cast<std::uint64_t>(state.aperture_steps), 2);

  std::array<Color, 3> roles{};
  int n = 0;
  switch (skill.family) {
    case RewardFamily::OpenGripper:
    case RewardFamily::CloseGripper:
      w.put(state.held ? 1 : 0, 1);
      return w.key() | level_tag(level);
    case RewardFamily::GraspAnything:
      roles[0] = nearest_graspable(state);
      n = 1;
      break;
    default:
      n = arity(skill.family);
      for (int i = 0; i < n; ++i) roles[i] = skill.colors[i];
  }

  for (int i = 0; i < n; ++i) {
    const Cell& o = state.object(roles[i]);
    w.put(clamp_offset(o.x - state.tcp.x, xy_clamp), 4);
    w.put(clamp_offset(o.y - state.tcp.y, xy_clamp), 4);
    w.put(clamp_offset(state.tcp.z - o.z, config.z_clamp), 4);
    w.put(covered(state, roles[i]) ? 1 : 0, 1);
  }

  int held = 0;
  if (state.held) {
    held = n + 1;
    for (int i = 0; i < n; ++i)
      if (*state.held == roles[i]) held = i + 1;
  }
  w.put(static_cast<std::uint64_t>(held), 3);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) w.put(state.supports(roles[j], roles[i]) ? 1 : 0, 1);

  if (skill.family == RewardFamily::Lift && config.lift_height)
    w.put(static_cast<std::uint64_t>(state.object(roles[0]).z), 3);
  return w.key() | level_tag(level);
}

namespace {

Cell mirror_cell(Cell c, int g) {
  if (g & 4) std::swap(c.x, c.y);
  if (g & 1) c.x = kGridXY - 1 - c.x;
  if (g & 2) c.y = kGridXY - 1 - c.y;
  return c;
}

}  // namespace

WorldState mirrored(const WorldState& state, int g) {
  WorldState out = state;
  for (Cell& c : out.objects) c = mirror_cell(c, g);
  out.tcp = mirror_cell(state.tcp, g);
  return out;
}

Action mirrored(Action action, int g) {
  int dx = 0, dy = 0;
  switch (action) {
    case Action::MoveXPos: dx = 1; break;
    case Action::MoveXNeg: dx = -1; break;
    case Action::MoveYPos: dy = 1; break;
    case Action::MoveYNeg: dy = -1; break;
    default: return action;
  }
  if (g & 4) std::swap(dx, dy);
  if (g & 1) dx = -dx;
  if (g & 2) dy = -dy;
  if (dx) return dx > 0 ? Action::MoveXPos : Action::MoveXNeg;
  return dy > 0 ? Action::MoveYPos : Action::MoveYNeg;
}

}  // namespace autocurriculum
