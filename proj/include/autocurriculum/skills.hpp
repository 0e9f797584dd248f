#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autocurriculum/reward.hpp"

namespace autocurriculum {

struct SkillSpec {
  std::string caption;
  RewardId reward_id;
  bool converged = false;
  bool operator==(const SkillSpec&) const = default;
};

/// Ordered caption -> reward binding with a one-way converged flag. Captions
/// are the only identifier shared across modules.
class SkillLibrary {
 public:
  SkillLibrary() = default;
  explicit SkillLibrary(std::vector<SkillSpec> skills);

  const std::vector<SkillSpec>& all() const { return skills_; }
  std::size_t size() const { return skills_.size(); }
  bool empty() const { return skills_.empty(); }
  bool contains(std::string_view caption) const { return find(caption) != nullptr; }
  const SkillSpec* find(std::string_view caption) const;
  const SkillSpec& at(std::string_view caption) const;

  std::vector<std::string> available(bool converged_only) const;
  std::vector<std::string> captions() const { return available(false); }

  SkillLibrary& mark_converged(std::string_view caption);
  SkillLibrary& add_skill(SkillSpec spec);
  /// Library containing only the listed captions, in this library's order.
  SkillLibrary restricted_to(const std::vector<std::string>& captions) const;

  bool operator==(const SkillLibrary&) const = default;

  std::string to_ndjson() const;
  static SkillLibrary from_ndjson(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SkillLibrary load(const std::filesystem::path& path);

 private:
  std::vector<SkillSpec> skills_;
};

/// The 18 basic skills the policy is pretrained on.
SkillLibrary base_library();
/// "hold X over Y" captions bound to the place_X_Y reward.
std::vector<SkillSpec> hold_skills();
/// The 18 composite skills (6 triple stacks, 6 pyramids, 6 inverted pyramids).
std::vector<SkillSpec> composite_skills();
std::vector<SkillSpec> composite_skills(RewardFamily family);

}  // namespace autocurriculum
