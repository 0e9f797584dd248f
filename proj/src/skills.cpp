#include "autocurriculum/skills.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "autocurriculum/errors.hpp"

namespace autocurriculum {

using nlohmann::json;

SkillLibrary::SkillLibrary(std::vector<SkillSpec> skills) {
  for (auto& s : skills) add_skill(std::move(s));
}

const SkillSpec* SkillLibrary::find(std::string_view caption) const {
  for (const auto& s : skills_)
    if (s.caption == caption) return &s;
  return nullptr;
}

const SkillSpec& SkillLibrary::at(std::string_view caption) const {
  if (const SkillSpec* s = find(caption)) return *s;
  throw UnknownSkillError("unknown skill caption '" + std::string(caption) + "'");
}

std::vector<std::string> SkillLibrary::available(bool converged_only) const {
  std::vector<std::string> out;
  for (const auto& s : skills_)
    if (!converged_only || s.converged) out.push_back(s.caption);
  return out;
}

SkillLibrary& SkillLibrary::mark_converged(std::string_view caption) {
  for (auto& s : skills_)
    if (s.caption == caption) {
      s.converged = true;
      return *this;
    }
  throw UnknownSkillError("cannot mark unknown skill '" + std::string(caption) + "'");
}

SkillLibrary& SkillLibrary::add_skill(SkillSpec spec) {
  if (spec.caption.empty()) throw DataError("skill caption must not be empty");
  if (contains(spec.caption)) throw DataError("duplicate skill caption '" + spec.caption + "'");
  skills_.push_back(std::move(spec));
  return *this;
}

SkillLibrary SkillLibrary::restricted_to(const std::vector<std::string>& captions) const {
  std::set<std::string, std::less<>> keep(captions.begin(), captions.end());
  SkillLibrary out;
  for (const auto& s : skills_)
    if (keep.count(s.caption)) out.skills_.push_back(s);
  return out;
}

std::string SkillLibrary::to_ndjson() const {
  std::string out;
  for (const auto& s : skills_) {
    json rec{{"caption", s.caption},
             {"reward_id", s.reward_id.to_string()},
             {"converged", s.converged}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

SkillLibrary SkillLibrary::from_ndjson(std::string_view text) {
  SkillLibrary lib;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed library record: ") + e.what());
    }
    if (!rec.contains("caption") || !rec.contains("reward_id"))
      throw DataError("library record needs caption and reward_id");
    lib.add_skill({rec.at("caption").get<std::string>(),
                   RewardId::parse(rec.at("reward_id").get<std::string>()),
                   rec.value("converged", false)});
  }
  return lib;
}

void SkillLibrary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write library file " + path.string());
  out << to_ndjson();
}

SkillLibrary SkillLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read library file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_ndjson(buf.str());
}

namespace {

std::string name(Color c) { return std::string(color_name(c)); }

RewardId bind(RewardFamily f, Color x = Color::Red, Color y = Color::Red, Color z = Color::Red) {
  return RewardId{f, {x, y, z}};
}

// Ordered pairs in the order the captions were listed in the exemplar prompts.
constexpr std::array<std::pair<Color, Color>, 6> kStackPairs{{
    {Color::Red, Color::Green},
    {Color::Red, Color::Blue},
    {Color::Green, Color::Red},
    {Color::Green, Color::Blue},
    {Color::Blue, Color::Red},
    {Color::Blue, Color::Green},
}};

}  // namespace

SkillLibrary base_library() {
  std::vector<SkillSpec> s;
  s.push_back({"grasp anything", bind(RewardFamily::GraspAnything)});
  s.push_back({"open gripper", bind(RewardFamily::OpenGripper)});
  s.push_back({"close gripper", bind(RewardFamily::CloseGripper)});
  for (Color c : kColors) s.push_back({"reach " + name(c), bind(RewardFamily::Reach, c)});
  for (Color c : kColors) s.push_back({"above " + name(c), bind(RewardFamily::Above, c)});
  for (Color c : kColors) s.push_back({"lift " + name(c), bind(RewardFamily::Lift, c)});
  for (auto [x, y] : kStackPairs)
    s.push_back({"stack " + name(x) + " on " + name(y), bind(RewardFamily::Stack, x, y)});
  return SkillLibrary(std::move(s));
}

std::vector<SkillSpec> hold_skills() {
  constexpr std::array<std::pair<Color, Color>, 6> order{{
      {Color::Red, Color::Green},
      {Color::Red, Color::Blue},
      {Color::Green, Color::Blue},
      {Color::Green, Color::Red},
      {Color::Blue, Color::Red},
      {Color::Blue, Color::Green},
  }};
  std::vector<SkillSpec> s;
  for (auto [x, y] : order)
    s.push_back({"hold " + name(x) + " over " + name(y), bind(RewardFamily::Place, x, y)});
  return s;
}

std::vector<SkillSpec> composite_skills(RewardFamily family) {
  using C = Color;
  std::vector<SkillSpec> s;
  switch (family) {
    case RewardFamily::TripleStack: {
      // stack_X_Y * stack_Y_Z reads as "stack Y on Z and X on Y".
      constexpr std::array<std::array<C, 3>, 6> xyz{{
          {C::Red, C::Green, C::Blue},
          {C::Red, C::Blue, C::Green},
          {C::Blue, C::Red, C::Green},
          {C::Blue, C::Green, C::Red},
          {C::Green, C::Blue, C::Red},
          {C::Green, C::Red, C::Blue},
      }};
      for (auto [x, y, z] : xyz)
        s.push_back({"stack " + name(y) + " on " + name(z) + " and " + name(x) + " on " + name(y),
                     bind(family, x, y, z)});
      break;
    }
    case RewardFamily::Pyramid: {
      constexpr std::array<std::array<C, 3>, 6> xyz{{
          {C::Red, C::Green, C::Blue},
          {C::Red, C::Blue, C::Green},
          {C::Green, C::Blue, C::Red},
          {C::Green, C::Red, C::Blue},
          {C::Blue, C::Red, C::Green},
          {C::Blue, C::Green, C::Red},
      }};
      for (auto [x, y, z] : xyz)
        s.push_back({"build a pyramid with " + name(x) + " on top and " + name(y) + " and " +
                         name(z) + " at the bottom",
                     bind(family, x, y, z)});
      break;
    }
    case RewardFamily::InversePyramid: {
      // stack_X_Y * stack_Z_Y: X and Z on top, Y at the bottom.
      constexpr std::array<std::array<C, 3>, 6> xyz{{
          {C::Green, C::Red, C::Blue},
          {C::Blue, C::Red, C::Green},
          {C::Blue, C::Green, C::Red},
          {C::Red, C::Green, C::Blue},
          {C::Red, C::Blue, C::Green},
          {C::Green, C::Blue, C::Red},
      }};
      for (auto [x, y, z] : xyz)
        s.push_back({"build an inverted pyramid with " + name(x) + " and " + name(z) +
                         " at the top and " + name(y) + " at the bottom",
                     bind(family, x, y, z)});
      break;
    }
    default: throw std::invalid_argument("not a composite reward family");
  }
  return s;
}

std::vector<SkillSpec> composite_skills() {
  std::vector<SkillSpec> out;
  for (auto f : {RewardFamily::TripleStack, RewardFamily::Pyramid, RewardFamily::InversePyramid}) {
    auto part = composite_skills(f);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace autocurriculum
