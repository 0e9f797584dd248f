#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autocurriculum {

enum class PromptKind : std::uint8_t { Proposition, Decomposition, Retrieval, Analysis };

std::string_view kind_name(PromptKind kind);
std::optional<PromptKind> parse_kind(std::string_view name);

// Field labels shared by templates, backends and tests.
namespace label {
inline constexpr std::string_view kScene = "Image observation of the current workspace";
inline constexpr std::string_view kCompleted = "Completed tasks so far";
inline constexpr std::string_view kFailed = "Failed tasks that are too hard";
inline constexpr std::string_view kQuery = "Q";
inline constexpr std::string_view kSkills = "Available skills";
inline constexpr std::string_view kLibrary = "Skill library";
inline constexpr std::string_view kCurve = "Reward curve";
inline constexpr std::string_view kReasoning = "Reasoning";
inline constexpr std::string_view kAnswer = "A";
}  // namespace label

/// One labeled line of a prompt. `text` is what a text-only model sees; the
/// optional PNG is attached for backends that accept images.
struct Field {
  std::string label;
  std::string text;
  std::vector<std::uint8_t> png;

  bool operator==(const Field&) const = default;
  std::string render() const;
};

struct Exemplar {
  std::vector<Field> fields;
  bool operator==(const Exemplar&) const = default;
};

struct PromptBundle {
  PromptKind kind = PromptKind::Proposition;
  std::string instruction;
  std::vector<Exemplar> exemplars;
  std::vector<Field> slots;  // evaluation content, in template order

  bool operator==(const PromptBundle&) const = default;

  const Field* slot(std::string_view label) const;
  /// Instruction, exemplars, then the evaluation slots, blank-line separated.
  std::string render_text() const;
  /// Every attached image in prompt order.
  std::vector<const std::vector<std::uint8_t>*> images() const;
};

/// Evaluation content for one call. Which members are required depends on
/// the prompt kind; assemble() rejects bundles with a missing slot.
struct PromptParts {
  std::optional<std::string> scene;
  std::vector<std::uint8_t> scene_png;
  std::optional<std::vector<std::string>> completed;
  std::optional<std::vector<std::string>> failed;
  std::optional<std::string> query;
  std::optional<std::vector<std::string>> skills;
  std::optional<std::vector<double>> curve;
  std::vector<std::uint8_t> curve_png;
};

/// Instruction text plus few-shot exemplars for every prompt kind, read from
/// a directory of `<kind>_instruction.txt` and `<kind>_exemplars.json` files.
class PromptTemplates {
 public:
  static PromptTemplates load(const std::filesystem::path& dir);
  /// The templates shipped with the source tree.
  static const PromptTemplates& builtin();

  const std::string& instruction(PromptKind kind) const;
  const std::vector<Exemplar>& exemplars(PromptKind kind) const;

 private:
  std::map<PromptKind, std::string> instructions_;
  std::map<PromptKind, std::vector<Exemplar>> exemplars_;
};

PromptBundle assemble(PromptKind kind, const PromptParts& parts,
                      const PromptTemplates& templates = PromptTemplates::builtin());

/// "[a, b, c]"; an empty list renders as "[]".
std::string render_list(const std::vector<std::string>& items);
/// Returns compact "%g" numbers, e.g. "[0, 12.5, 40]".
std::string render_series(const std::vector<double>& values);

struct ParsedResponse {
  std::string reasoning;
  std::string answer;
  bool operator==(const ParsedResponse&) const = default;
};

/// Extracts the last "A:" field and the "Reasoning:" field preceding it.
/// Throws ParseError when either is missing or empty. For decomposition the
/// answer must also be a non-empty bracketed list.
ParsedResponse parse(std::string_view raw, PromptKind kind = PromptKind::Proposition);

/// Bracketed, comma-separated list with optional single or double quotes
/// around items. Throws ParseError on anything else.
std::vector<std::string> parse_list(std::string_view text);

/// Trim, lowercase and drop trailing punctuation; used for caption matching.
std::string normalize_caption(std::string_view text);

struct CallOptions {
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t call_index = 0;  // owned by the caller, advanced per call
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// Raw completion text. Throws TransportError when the model is unreachable.
  virtual std::string complete(const PromptBundle& bundle, const CallOptions& options) = 0;
  virtual std::string_view kind() const = 0;
};

struct RemoteConfig {
  std::string url;  // e.g. http://localhost:8080/v1/complete
  std::string api_key_env = "AUTOCURRICULUM_API_KEY";
  double timeout_seconds = 30.0;
  int attempts = 3;
  double backoff_seconds = 0.5;
};

/// Rule-based stand-in for the language model; deterministic given the bundle
/// and the call options.
std::unique_ptr<Backend> make_mock_backend();
/// JSON-over-HTTP completion endpoint; see docs/protocol.md.
std::unique_ptr<Backend> make_remote_backend(const RemoteConfig& config);

}  // namespace autocurriculum
