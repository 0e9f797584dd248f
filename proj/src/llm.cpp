#include "autocurriculum/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/image.hpp"

namespace autocurriculum {

using nlohmann::json;

namespace {

constexpr std::array<PromptKind, 4> kKinds{PromptKind::Proposition, PromptKind::Decomposition,
                                           PromptKind::Retrieval, PromptKind::Analysis};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string strip_period(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  return std::string(trim(s));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read prompt file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Field text_field(std::string_view label, std::string text) {
  return Field{std::string(label), std::move(text), {}};
}

std::vector<std::uint8_t> curve_png(const std::vector<double>& returns) {
  std::vector<double> xs(returns.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  return plot_series(xs, returns, 400.0).encode_png();
}

std::vector<std::string> strings(const json& j, const char* key) {
  return j.at(key).get<std::vector<std::string>>();
}

Exemplar load_exemplar(PromptKind kind, const json& j) {
  Exemplar ex;
  auto& f = ex.fields;
  switch (kind) {
    case PromptKind::Proposition:
      f.push_back(text_field(label::kScene, j.at("scene").get<std::string>()));
      f.push_back(text_field(label::kCompleted, render_list(strings(j, "completed"))));
      f.push_back(text_field(label::kFailed, render_list(strings(j, "failed"))));
      break;
    case PromptKind::Decomposition:
      f.push_back(text_field(label::kQuery, j.at("task").get<std::string>()));
      f.push_back(text_field(label::kScene, j.at("scene").get<std::string>()));
      f.push_back(text_field(label::kSkills, render_list(strings(j, "skills"))));
      break;
    case PromptKind::Retrieval:
      f.push_back(text_field(label::kQuery, j.at("query").get<std::string>()));
      f.push_back(text_field(label::kLibrary, render_list(strings(j, "skills"))));
      break;
    case PromptKind::Analysis: {
      auto returns = j.at("returns").get<std::vector<double>>();
      f.push_back(Field{std::string(label::kCurve), render_series(returns), curve_png(returns)});
      break;
    }
  }
  f.push_back(text_field(label::kReasoning, j.at("reasoning").get<std::string>()));
  f.push_back(text_field(label::kAnswer, j.at("answer").get<std::string>()));
  return ex;
}

template <typename T>
const T& require(const std::optional<T>& v, PromptKind kind, std::string_view what) {
  if (!v)
    throw ConfigError(std::string(kind_name(kind)) + " prompt is missing the " +
                      std::string(what) + " slot");
  return *v;
}

// Position of the last `key` that starts a field: at the beginning of the
// text or after whitespace or a period.
std::size_t find_last_field(std::string_view raw, std::string_view key, std::size_t limit) {
  std::size_t pos = std::min(limit, raw.size());
  while (pos != std::string_view::npos && pos > 0) {
    std::size_t hit = raw.rfind(key, pos - 1);
    if (hit == std::string_view::npos) return hit;
    if (hit == 0 || std::isspace(static_cast<unsigned char>(raw[hit - 1])) || raw[hit - 1] == '.')
      return hit;
    pos = hit;
  }
  return std::string_view::npos;
}

}  // namespace

std::string_view kind_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::Proposition: return "proposition";
    case PromptKind::Decomposition: return "decomposition";
    case PromptKind::Retrieval: return "retrieval";
    case PromptKind::Analysis: return "analysis";
  }
  return "?";
}

std::optional<PromptKind> parse_kind(std::string_view name) {
  for (auto k : kKinds)
    if (kind_name(k) == name) return k;
  return std::nullopt;
}

std::string Field::render() const {
  std::string out = label + ": " + text;
  if (text.empty() || text.back() != '.') out += '.';
  return out;
}

const Field* PromptBundle::slot(std::string_view name) const {
  for (const auto& f : slots)
    if (f.label == name) return &f;
  return nullptr;
}

std::string PromptBundle::render_text() const {
  std::string out = instruction;
  while (!out.empty() && out.back() == '\n') out.pop_back();
  for (const auto& ex : exemplars) {
    out += "\n\n";
    for (std::size_t i = 0; i < ex.fields.size(); ++i) {
      if (i) out += '\n';
      out += ex.fields[i].render();
    }
  }
  out += "\n\n";
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i) out += '\n';
    out += slots[i].render();
  }
  out += '\n';
  return out;
}

std::vector<const std::vector<std::uint8_t>*> PromptBundle::images() const {
  std::vector<const std::vector<std::uint8_t>*> out;
  for (const auto& ex : exemplars)
    for (const auto& f : ex.fields)
      if (!f.png.empty()) out.push_back(&f.png);
  for (const auto& f : slots)
    if (!f.png.empty()) out.push_back(&f.png);
  return out;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t;
  for (PromptKind kind : kKinds) {
    std::string name(kind_name(kind));
    t.instructions_[kind] = read_file(dir / (name + "_instruction.txt"));
    json doc;
    try {
      doc = json::parse(read_file(dir / (name + "_exemplars.json")));
      auto& list = t.exemplars_[kind];
      for (const auto& j : doc) list.push_back(load_exemplar(kind, j));
    } catch (const json::exception& e) {
      throw ConfigError("malformed " + name + " exemplars: " + e.what());
    }
  }
  return t;
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates templates = [] {
    const char* env = std::getenv("AUTOCURRICULUM_PROMPTS");
    return load(env && *env ? std::filesystem::path(env)
                            : std::filesystem::path(AUTOCURRICULUM_PROMPT_DIR));
  }();
  return templates;
}

const std::string& PromptTemplates::instruction(PromptKind kind) const {
  return instructions_.at(kind);
}

const std::vector<Exemplar>& PromptTemplates::exemplars(PromptKind kind) const {
  return exemplars_.at(kind);
}

PromptBundle assemble(PromptKind kind, const PromptParts& parts,
                      const PromptTemplates& templates) {
  PromptBundle b;
  b.kind = kind;
  b.instruction = templates.instruction(kind);
  b.exemplars = templates.exemplars(kind);
  auto scene = [&] {
    return Field{std::string(label::kScene), require(parts.scene, kind, "scene"), parts.scene_png};
  };
  switch (kind) {
    case PromptKind::Proposition:
      b.slots.push_back(scene());
      b.slots.push_back(text_field(label::kCompleted,
                                   render_list(require(parts.completed, kind, "completed tasks"))));
      b.slots.push_back(
          text_field(label::kFailed, render_list(require(parts.failed, kind, "failed tasks"))));
      break;
    case PromptKind::Decomposition:
      b.slots.push_back(text_field(label::kQuery, require(parts.query, kind, "task")));
      b.slots.push_back(scene());
      b.slots.push_back(
          text_field(label::kSkills, render_list(require(parts.skills, kind, "available skills"))));
      break;
    case PromptKind::Retrieval:
      b.slots.push_back(text_field(label::kQuery, require(parts.query, kind, "query")));
      b.slots.push_back(
          text_field(label::kLibrary, render_list(require(parts.skills, kind, "skill library"))));
      break;
    case PromptKind::Analysis: {
      const auto& curve = require(parts.curve, kind, "reward curve");
      b.slots.push_back(Field{std::string(label::kCurve), render_series(curve),
                              parts.curve_png.empty() ? curve_png(curve) : parts.curve_png});
      break;
    }
  }
  return b;
}

std::string render_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + "]";
}

std::string render_series(const std::vector<double>& values) {
  std::string out = "[";
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    std::snprintf(buf, sizeof buf, "%g", values[i]);
    out += buf;
  }
  return out + "]";
}

ParsedResponse parse(std::string_view raw, PromptKind kind) {
  const std::size_t a = find_last_field(raw, "A:", raw.size());
  if (a == std::string_view::npos) throw ParseError("response has no 'A:' field");
  const std::size_t r = find_last_field(raw, "Reasoning:", a);
  if (r == std::string_view::npos) throw ParseError("response has no 'Reasoning:' field");
  const std::size_t r_begin = r + std::string_view("Reasoning:").size();
  ParsedResponse out;
  out.reasoning = strip_period(raw.substr(r_begin, a - r_begin));
  out.answer = strip_period(raw.substr(a + 2));
  if (out.reasoning.empty()) throw ParseError("response has an empty 'Reasoning:' field");
  if (out.answer.empty()) throw ParseError("response has an empty 'A:' field");
  if (kind == PromptKind::Decomposition && parse_list(out.answer).empty())
    throw ParseError("decomposition answer is an empty list");
  return out;
}

std::vector<std::string> parse_list(std::string_view text) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']')
    throw ParseError("expected a bracketed list, got '" + std::string(text) + "'");
  std::string_view inner = trim(text.substr(1, text.size() - 2));
  std::vector<std::string> items;
  if (inner.empty()) return items;
  std::string current;
  char quote = 0;
  auto flush = [&] {
    std::string_view item = trim(current);
    if (item.size() >= 2 && (item.front() == '"' || item.front() == '\'') &&
        item.back() == item.front())
      item = trim(item.substr(1, item.size() - 2));
    if (item.empty()) throw ParseError("empty item in list '" + std::string(text) + "'");
    items.emplace_back(item);
    current.clear();
  };
  for (char c : inner) {
    if (quote) {
      if (c == quote) quote = 0;
      current += c;
    } else if (c == '"' || c == '\'') {
      // A quote only opens a quoted item at its start; apostrophes inside
      // plain items are kept as text.
      if (trim(current).empty()) quote = c;
      current += c;
    } else if (c == ',') {
      flush();
    } else if (c == '[' || c == ']') {
      throw ParseError("nested brackets in list '" + std::string(text) + "'");
    } else {
      current += c;
    }
  }
  if (quote) throw ParseError("unterminated quote in list '" + std::string(text) + "'");
  flush();
  return items;
}

std::string normalize_caption(std::string_view text) {
  auto strip_trailing = [](std::string_view s) {
    s = trim(s);
    while (!s.empty() && std::string_view(".,;:!?").find(s.back()) != std::string_view::npos)
      s = trim(s.substr(0, s.size() - 1));
    return s;
  };
  text = strip_trailing(text);
  if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
      text.back() == text.front())
    text = strip_trailing(text.substr(1, text.size() - 2));
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace autocurriculum
