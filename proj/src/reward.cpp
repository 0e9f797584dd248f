#include "autocurriculum/reward.hpp"

#include <algorithm>
#include <cmath>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/skills.hpp"

namespace autocurriculum {

namespace {

struct FamilyInfo {
  RewardFamily family;
  std::string_view name;
  int arity;
};

constexpr std::array<FamilyInfo, 11> kFamilies{{
    {RewardFamily::OpenGripper, "open_gripper", 0},
    {RewardFamily::CloseGripper, "close_gripper", 0},
    {RewardFamily::GraspAnything, "grasp_anything", 0},
    {RewardFamily::Reach, "reach", 1},
    {RewardFamily::Above, "above", 1},
    {RewardFamily::Lift, "lift", 1},
    {RewardFamily::Place, "place", 2},
    {RewardFamily::Stack, "stack", 2},
    {RewardFamily::TripleStack, "triple_stack", 3},
    {RewardFamily::Pyramid, "pyramid", 3},
    {RewardFamily::InversePyramid, "inverse_pyramid", 3},
}};

const FamilyInfo& info(RewardFamily f) {
  for (const auto& i : kFamilies)
    if (i.family == f) return i;
  throw std::logic_error("unhandled reward family");
}

double tangential(double distance, double scale) { return 1.0 - std::tanh(distance / scale); }

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

double place(const WorldState& s, Color x, Color y, const RewardParams& p) {
  Vec3 target = s.center(y) + Vec3{0, 0, p.place_offset};
  return tangential((s.center(x) - target).norm(), p.reach_scale);
}

double stack(const WorldState& s, Color x, Color y, const RewardParams& p) {
  return s.grasp_sensor ? 0.0 : place(s, x, y, p);
}

}  // namespace

int arity(RewardFamily f) { return info(f).arity; }

bool is_composite(RewardFamily f) {
  return f == RewardFamily::TripleStack || f == RewardFamily::Pyramid ||
         f == RewardFamily::InversePyramid;
}

bool RewardId::operator==(const RewardId& o) const {
  if (family != o.family) return false;
  for (int i = 0; i < arity(family); ++i)
    if (colors[i] != o.colors[i]) return false;
  return true;
}

std::string RewardId::to_string() const {
  std::string out(info(family).name);
  for (int i = 0; i < arity(family); ++i) {
    out += '_';
    out += color_name(colors[i]);
  }
  return out;
}

RewardId RewardId::parse(std::string_view text) {
  // Longest family name first so "triple_stack_..." does not match "stack".
  std::vector<const FamilyInfo*> ordered;
  for (const auto& i : kFamilies) ordered.push_back(&i);
  std::sort(ordered.begin(), ordered.end(),
            [](auto* a, auto* b) { return a->name.size() > b->name.size(); });
  for (const FamilyInfo* fi : ordered) {
    if (text.substr(0, fi->name.size()) != fi->name) continue;
    std::string_view rest = text.substr(fi->name.size());
    RewardId id;
    id.family = fi->family;
    for (int i = 0; i < fi->arity; ++i) {
      if (rest.empty() || rest.front() != '_') break;
      rest.remove_prefix(1);
      auto end = rest.find('_');
      auto c = parse_color(rest.substr(0, end));
      if (!c) break;
      id.colors[i] = *c;
      rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
      if (i + 1 == fi->arity && rest.empty()) return id;
    }
    if (fi->arity == 0 && rest.empty()) return id;
  }
  throw UnknownSkillError("unknown reward id '" + std::string(text) +
                          "': library and reward functions disagree");
}

void RewardParams::check() const {
  if (!(reach_scale > 0 && above_offset > 0 && place_offset > 0 && lift_low > 0 && lift_high > 0))
    throw ConfigError("reward offsets and scales must be positive");
  if (!(lift_low < lift_high)) throw ConfigError("lift_low must be below lift_high");
}

double reward(const RewardId& id, const WorldState& s, const RewardParams& p) {
  const auto [x, y, z] = id.colors;
  double r = 0;
  switch (id.family) {
    case RewardFamily::OpenGripper: r = s.aperture(); break;
    case RewardFamily::CloseGripper: r = 1.0 - s.aperture(); break;
    case RewardFamily::GraspAnything: r = s.grasp_sensor ? 1.0 : 0.0; break;
    case RewardFamily::Reach:
      r = tangential((s.tcp_position() - s.center(x)).norm(), p.reach_scale);
      break;
    case RewardFamily::Above: {
      Vec3 target = s.center(x) + Vec3{0, 0, p.above_offset};
      r = tangential((s.tcp_position() - target).norm(), p.reach_scale);
      break;
    }
    case RewardFamily::Lift:
      r = (s.center(x).z - p.lift_low) / (p.lift_high - p.lift_low);
      break;
    case RewardFamily::Place: r = place(s, x, y, p); break;
    case RewardFamily::Stack: r = stack(s, x, y, p); break;
    case RewardFamily::TripleStack: r = stack(s, x, y, p) * stack(s, y, z, p); break;
    case RewardFamily::Pyramid: r = stack(s, x, y, p) * stack(s, x, z, p); break;
    case RewardFamily::InversePyramid: r = stack(s, x, y, p) * stack(s, z, y, p); break;
  }
  return clip01(r);
}

Episode relabel(Episode episode, const SkillLibrary& library, const RewardParams& params) {
  for (const SkillSpec& skill : library.all()) {
    if (episode.channel(skill.caption)) continue;
    RewardChannel ch;
    ch.caption = skill.caption;
    ch.reward_id = skill.reward_id.to_string();
    ch.values.reserve(episode.length());
    for (std::size_t t = 0; t < episode.length(); ++t)
      ch.values.push_back(reward(skill.reward_id, episode.states[t + 1], params));
    episode.channels.push_back(std::move(ch));
  }
  return episode;
}

void SuccessCriteria::check() const {
  if (!(0 < per_skill_threshold && per_skill_threshold < final_skill_threshold &&
        final_skill_threshold <= 1))
    throw ConfigError("success thresholds must satisfy 0 < per_skill < final <= 1");
}

bool meets_thresholds(const std::vector<double>& finals, const SuccessCriteria& criteria) {
  if (finals.empty()) return false;
  for (double f : finals)
    if (!(f > criteria.per_skill_threshold)) return false;
  return finals.back() > criteria.final_skill_threshold;
}

JudgeResult judge_success(const Episode& episode, const std::vector<std::string>& plan_captions,
                          const SuccessCriteria& criteria) {
  if (episode.segments.size() != plan_captions.size())
    throw DataError("episode " + episode.id + " has " + std::to_string(episode.segments.size()) +
                    " segments but the plan has " + std::to_string(plan_captions.size()) +
                    " skills");
  JudgeResult result;
  for (std::size_t i = 0; i < plan_captions.size(); ++i) {
    const Segment& seg = episode.segments[i];
    if (seg.caption != plan_captions[i])
      throw DataError("segment " + std::to_string(i) + " executed '" + seg.caption +
                      "' but the plan expects '" + plan_captions[i] + "'");
    const RewardChannel* ch = episode.channel(seg.caption);
    if (!ch) throw DataError("episode " + episode.id + " lacks a reward channel for '" +
                             seg.caption + "'");
    if (seg.end == 0 || seg.end > ch->values.size())
      throw DataError("segment boundary outside the episode");
    result.segment_finals.push_back(ch->values[seg.end - 1]);
  }
  result.success = meets_thresholds(result.segment_finals, criteria);
  return result;
}

}  // namespace autocurriculum
