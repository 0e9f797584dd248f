// Rule-based language-model stand-in. Each prompt kind is answered by a small
// grammar over the task phrasings the proposer itself emits, so the full
// propose -> decompose -> retrieve loop runs offline and reproducibly.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "autocurriculum/analysis.hpp"
#include "autocurriculum/errors.hpp"
#include "autocurriculum/llm.hpp"
#include "autocurriculum/random.hpp"
#include "autocurriculum/world.hpp"

namespace autocurriculum {

namespace {

using Strings = std::vector<std::string>;

std::string name(Color c) { return std::string(color_name(c)); }

std::string response(const std::string& reasoning, const std::string& answer) {
  return "Reasoning: " + reasoning + "\nA: " + answer + "\n";
}

Strings slot_list(const PromptBundle& b, std::string_view label) {
  const Field* f = b.slot(label);
  if (!f) throw ParseError("mock backend: prompt lacks the '" + std::string(label) + "' slot");
  return parse_list(f->text);
}

std::string slot_text(const PromptBundle& b, std::string_view label) {
  const Field* f = b.slot(label);
  if (!f) throw ParseError("mock backend: prompt lacks the '" + std::string(label) + "' slot");
  return f->text;
}

// Tallies repeated entries; a trailing "(xN)" counts N times.
std::vector<std::pair<std::string, int>> tally(const Strings& items) {
  static const std::regex counted(R"(^(.*\S)\s*\(x(\d+)\)$)");
  std::vector<std::pair<std::string, int>> out;
  for (const auto& item : items) {
    std::string text = item;
    int n = 1;
    std::smatch m;
    if (std::regex_match(item, m, counted)) {
      text = m[1];
      n = std::stoi(m[2]);
    }
    auto it = std::find_if(out.begin(), out.end(), [&](auto& p) { return p.first == text; });
    if (it == out.end())
      out.emplace_back(text, n);
    else
      it->second += n;
  }
  return out;
}

int count_of(const std::vector<std::pair<std::string, int>>& t, const std::string& key) {
  for (const auto& [k, n] : t)
    if (k == key) return n;
  return 0;
}

std::optional<Color> color_word(const std::string& w) { return parse_color(w); }

// ---- task grammar ---------------------------------------------------------

enum class TaskForm { Grasp, Lift, Stack, NextTo, Tower, Line, Pyramid, InversePyramid };

struct Task {
  TaskForm form;
  std::array<Color, 3> c{};
};

std::string phrase(const Task& t) {
  const auto& [a, b, c] = t.c;
  switch (t.form) {
    case TaskForm::Grasp: return "grasp the " + name(a) + " object";
    case TaskForm::Lift: return "lift the " + name(a) + " object up";
    case TaskForm::Stack:
      return "stack the " + name(a) + " object on top of the " + name(b) + " object";
    case TaskForm::NextTo: return "put the " + name(a) + " object next to the " + name(b) + " object";
    case TaskForm::Tower:
      return "build a three-level tower with " + name(a) + " on top of " + name(b) + " on top of " +
             name(c);
    case TaskForm::Line:
      return "build a line with the " + name(a) + " object next to the " + name(b) +
             " object and the " + name(c) + " object next to the " + name(b) + " object";
    case TaskForm::Pyramid:
      return "build a pyramid with " + name(a) + " on top and " + name(b) + " and " + name(c) +
             " at the bottom";
    case TaskForm::InversePyramid:
      return "build an inverted pyramid with " + name(a) + " and " + name(c) + " at the top and " +
             name(b) + " at the bottom";
  }
  return {};
}

std::optional<Task> parse_task(const std::string& text) {
  struct Rule {
    TaskForm form;
    std::regex re;
    std::array<int, 3> groups;
  };
  static const std::vector<Rule> rules = [] {
    const std::string C = "(red|green|blue)";
    std::vector<Rule> r;
    r.push_back({TaskForm::Grasp, std::regex("grasp the " + C + " object"), {1, 1, 1}});
    r.push_back({TaskForm::Lift, std::regex("lift the " + C + " object( up)?"), {1, 1, 1}});
    r.push_back({TaskForm::Stack,
                 std::regex("stack the " + C + " object on top of the " + C + " object"),
                 {1, 2, 2}});
    r.push_back({TaskForm::NextTo,
                 std::regex("put the " + C + " object next to the " + C + " object"), {1, 2, 2}});
    r.push_back({TaskForm::Tower,
                 std::regex("build a three-level tower with " + C + " on top of " + C +
                            " on top of " + C),
                 {1, 2, 3}});
    r.push_back({TaskForm::Line,
                 std::regex("build a line with the " + C + " object next to the " + C +
                            " object and the " + C + " object next to the \\2 object"),
                 {1, 2, 3}});
    r.push_back({TaskForm::Pyramid,
                 std::regex("build a pyramid with " + C + " on top and " + C + " and " + C +
                            " at the bottom"),
                 {1, 2, 3}});
    r.push_back({TaskForm::InversePyramid,
                 std::regex("build an inverted pyramid with " + C + " and " + C + " at the top and " +
                            C + " at the bottom"),
                 {1, 3, 2}});
    return r;
  }();
  const std::string t = normalize_caption(text);
  for (const auto& rule : rules) {
    std::smatch m;
    if (!std::regex_match(t, m, rule.re)) continue;
    Task task{rule.form, {}};
    for (int i = 0; i < 3; ++i) task.c[i] = *color_word(m[rule.groups[i]]);
    return task;
  }
  return std::nullopt;
}

// ---- proposition ----------------------------------------------------------

using Tally = std::vector<std::pair<std::string, int>>;

struct Progress {
  std::set<Color> manipulated;  // grasped, lifted or moved onto something
  std::set<Color> reached;  // tcp brought onto the object
  bool stacked = false;
  bool towered = false;
};

Progress progress(const Tally& completed) {
  static const std::regex basic("(grasp|lift|reach|above|stack|hold) (red|green|blue)( on| over)?.*");
  Progress p;
  for (const auto& [text, n] : completed) {
    (void)n;
    const std::string t = normalize_caption(text);
    if (auto task = parse_task(t)) {
      switch (task->form) {
        case TaskForm::Grasp:
        case TaskForm::Lift: p.manipulated.insert(task->c[0]); break;
        case TaskForm::Stack:
        case TaskForm::NextTo:
          p.manipulated.insert(task->c[0]);
          p.stacked = true;
          break;
        default:
          p.stacked = true;
          p.towered = true;
          for (Color c : task->c) p.manipulated.insert(c);
      }
      continue;
    }
    std::smatch m;
    if (!std::regex_match(t, m, basic)) {
      if (t.rfind("stack ", 0) == 0 && t.find(" and ") != std::string::npos) p.towered = true;
      continue;
    }
    const std::string verb = m[1];
    const Color c = *color_word(m[2]);
    if (verb == "reach") {
      p.reached.insert(c);
    } else if (verb != "above") {
      p.manipulated.insert(c);
      if (verb == "stack") p.stacked = true;
      if (verb == "stack" && t.find(" and ") != std::string::npos) p.towered = true;
    }
  }
  return p;
}

std::vector<Task> level_candidates(const Progress& p, std::string& level) {
  std::vector<Task> out;
  if (!p.stacked && p.manipulated.size() < kColors.size()) {
    level = "grasp";
    for (bool want_unreached : {true, false})
      for (Color c : kColors)
        if (!p.manipulated.count(c) && (p.reached.count(c) == 0) == want_unreached)
          out.push_back({TaskForm::Grasp, {c, c, c}});
    return out;
  }
  if (!p.stacked) {
    level = "stack";
    for (Color a : kColors)
      for (Color b : kColors)
        if (a != b) out.push_back({TaskForm::Stack, {a, b, b}});
    return out;
  }
  using C = Color;
  constexpr std::array<std::array<C, 3>, 6> orders{{
      {C::Blue, C::Green, C::Red},
      {C::Blue, C::Red, C::Green},
      {C::Green, C::Blue, C::Red},
      {C::Green, C::Red, C::Blue},
      {C::Red, C::Green, C::Blue},
      {C::Red, C::Blue, C::Green},
  }};
  if (!p.towered) {
    level = "tower";
    for (auto o : orders) out.push_back({TaskForm::Tower, o});
    return out;
  }
  level = "structure";
  for (C mid : kColors) {
    std::vector<C> ends;
    for (C c : kColors)
      if (c != mid) ends.push_back(c);
    out.push_back({TaskForm::Line, {ends[0], mid, ends[1]}});
  }
  for (auto o : orders) out.push_back({TaskForm::Pyramid, o});
  for (auto o : orders) out.push_back({TaskForm::InversePyramid, o});
  return out;
}

std::string propose(const PromptBundle& b, Rng& rng, double temperature) {
  const Tally completed = tally(slot_list(b, label::kCompleted));
  const Tally failed = tally(slot_list(b, label::kFailed));
  const Progress p = progress(completed);

  std::string reasoning =
      "Three objects are in view: red, green and blue. They can form a line, three separate dots, "
      "a two-level tower with the third object aside, or a three-level tower. ";

  // Tasks that already worked but keep failing get more practice.
  const std::string* practice = nullptr;
  int practice_failures = 0;
  for (const auto& [text, n] : failed) {
    int s = count_of(completed, text);
    if (s >= 1 && n >= 5 && n < 10 && n > practice_failures) {
      practice = &text;
      practice_failures = n;
    }
  }
  if (practice)
    return response(reasoning + "The robot has succeeded at '" + *practice + "' before but failed it " +
                        std::to_string(practice_failures) + " times, so it should practice it more.",
                    *practice);

  std::string level;
  const auto candidates = level_candidates(p, level);
  auto attempts = [&](const Task& t) {
    return count_of(completed, phrase(t)) + count_of(failed, phrase(t));
  };
  auto too_hard = [&](const Task& t) {
    int f = count_of(failed, phrase(t));
    return (f >= 5 && count_of(completed, phrase(t)) == 0) || f >= 10;
  };
  auto pick = [&](std::vector<const Task*> pool) -> const Task* {
    if (pool.empty()) return nullptr;
    if (temperature > 0 && pool.size() > 1 && uniform_unit(rng) < temperature)
      return pool[uniform_index(rng, pool.size())];
    return pool.front();
  };

  std::vector<const Task*> untried;
  for (const auto& t : candidates)
    if (attempts(t) == 0) untried.push_back(&t);
  const Task* choice = pick(untried);
  std::string why;
  if (choice) {
    if (level == "grasp")
      why = "The robot has not grasped the " + name(choice->c[0]) +
            " object yet, so grasping it is the natural next step.";
    else if (level == "stack")
      why = "The robot can grasp every object but has not stacked any, so a two-level tower is next.";
    else if (level == "tower")
      why = "The robot has built two-level towers, so a three-level tower is a feasible next "
            "challenge.";
    else
      why = "The robot has built three-level towers, so other arrangements of all three objects "
            "are worth trying.";
  } else {
    int fewest = 0;
    std::vector<const Task*> pool;
    for (const auto& t : candidates) {
      if (too_hard(t)) continue;
      int a = attempts(t);
      if (pool.empty() || a < fewest) {
        pool.clear();
        fewest = a;
      }
      if (a == fewest) pool.push_back(&t);
    }
    choice = pick(pool);
    why = "Every task at this stage has been tried; this one has had the fewest attempts.";
    if (!choice) {
      int least = 0;
      for (const auto& t : candidates) {
        int f = count_of(failed, phrase(t));
        if (!choice || f < least) {
          choice = &t;
          least = f;
        }
      }
      why = "Every task at this stage has failed repeatedly; this one has failed least often.";
    }
  }
  return response(reasoning + why, phrase(*choice));
}

// ---- decomposition --------------------------------------------------------

Strings steps_for(const Task& t, const std::set<std::string>& avail, Rng& rng, double temperature) {
  auto has = [&](const std::string& s) { return avail.count(s) > 0; };
  const auto& [a, b, c] = t.c;
  auto grasp = [&](Color x) -> Strings {
    return {has("reach " + name(x)) ? "reach " + name(x) : "above " + name(x), "close gripper"};
  };
  auto stack = [&](Color x, Color y) -> Strings {
    std::string s = "stack " + name(x) + " on " + name(y);
    if (has(s)) return {s};
    Strings out = grasp(x);
    out.push_back("lift " + name(x));
    std::string hold = "hold " + name(x) + " over " + name(y);
    out.push_back(has(hold) ? hold : "above " + name(y));
    out.push_back("open gripper");
    return out;
  };
  auto next_to = [&](Color x, Color y) {
    Strings out = stack(x, y);
    out.push_back("lift " + name(x));
    out.push_back("open gripper");
    return out;
  };
  auto concat = [](Strings x, const Strings& y) {
    x.insert(x.end(), y.begin(), y.end());
    return x;
  };
  switch (t.form) {
    case TaskForm::Grasp: return grasp(a);
    case TaskForm::Lift: return concat(grasp(a), {"lift " + name(a)});
    case TaskForm::Stack: return stack(a, b);
    case TaskForm::NextTo: return next_to(a, b);
    case TaskForm::Tower: {
      std::string composite = "stack " + name(b) + " on " + name(c) + " and " + name(a) + " on " + name(b);
      if (has(composite)) return {composite};
      if (temperature > 0 && uniform_unit(rng) < temperature) {
        // Fully spelled-out variant: each move as reach, grasp, lift, place, release.
        auto spelled = [&](Color src, Color dst) -> Strings {
          return {"reach " + name(src), "above " + name(src),   "grasp anything",
                  "close gripper",      "lift " + name(src),    "reach " + name(dst),
                  "above " + name(dst), "stack " + name(src) + " on " + name(dst),
                  "open gripper"};
        };
        return concat(spelled(c, b), spelled(a, b));
      }
      return concat(stack(b, c), stack(a, b));
    }
    case TaskForm::Line: {
      std::string composite = "stack " + name(b) + " on " + name(c) + " and " + name(a) + " on " + name(b);
      if (has(composite)) return {composite};
      return concat(next_to(a, b), next_to(c, b));
    }
    case TaskForm::Pyramid: {
      std::string composite = phrase(t);
      if (has(composite)) return {composite};
      return concat(next_to(b, c), stack(a, b));
    }
    case TaskForm::InversePyramid: {
      std::string composite = phrase(t);
      if (has(composite)) return {composite};
      return concat(stack(a, b), stack(c, b));
    }
  }
  return {};
}

std::string decompose(const PromptBundle& b, Rng& rng, double temperature) {
  const std::string task = slot_text(b, label::kQuery);
  const Strings skills = slot_list(b, label::kSkills);
  const std::set<std::string> avail(skills.begin(), skills.end());
  auto parsed = parse_task(task);
  if (!parsed)
    return response("The task does not match a known arrangement, so it is passed on as a single "
                    "step.",
                    render_list({normalize_caption(task)}));
  Strings steps = steps_for(*parsed, avail, rng, temperature);
  std::string reasoning =
      steps.size() == 1
          ? "A single available skill achieves '" + task + "' directly."
          : "The task '" + task + "' needs " + std::to_string(steps.size()) +
                " consecutive steps built from the available skills.";
  return response(reasoning, render_list(steps));
}

// ---- retrieval ------------------------------------------------------------

Strings canonical_tokens(const std::string& text) {
  static const std::vector<std::pair<std::regex, std::string>> phrases = {
      {std::regex(R"(\bon top of\b)"), "on"},
      {std::regex(R"(\b(reach|move|go) above\b)"), "above"},
      {std::regex(R"(\bpick up\b)"), "grasp"},
      {std::regex(R"(\bnext to\b)"), "beside"},
  };
  static const std::map<std::string, std::string, std::less<>> synonyms = {
      {"put", "stack"},   {"place", "stack"},  {"stacking", "stack"}, {"grab", "grasp"},
      {"pick", "grasp"},  {"grasping", "grasp"}, {"raise", "lift"},  {"lifting", "lift"},
      {"onto", "on"},     {"over", "over"},    {"release", "open"},  {"touch", "reach"},
  };
  static const std::set<std::string, std::less<>> stop = {
      "a",    "an",  "the", "object", "objects", "one",  "of",   "up",   "to",
      "robot", "can", "and", "then",  "first",   "with", "it",   "its",  "is",
      "top",  "at",  "block", "cube", "should",  "will", "be",   "that", "this"};
  std::string t = normalize_caption(text);
  for (const auto& [re, rep] : phrases) t = std::regex_replace(t, re, rep);
  Strings out;
  std::istringstream in(t);
  std::string w;
  while (in >> w) {
    while (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.back()))) w.pop_back();
    while (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.front()))) w.erase(w.begin());
    if (w.empty() || stop.count(w)) continue;
    if (auto it = synonyms.find(w); it != synonyms.end()) w = it->second;
    out.push_back(w);
  }
  return out;
}

std::vector<Color> color_sequence(const Strings& tokens) {
  std::vector<Color> out;
  for (const auto& t : tokens)
    if (auto c = parse_color(t)) out.push_back(*c);
  return out;
}

double jaccard(const Strings& a, const Strings& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

constexpr double kMinOverlap = 0.5;

std::string retrieve(const PromptBundle& b) {
  const std::string query = slot_text(b, label::kQuery);
  const Strings library = slot_list(b, label::kLibrary);
  const std::string nq = normalize_caption(query);
  for (const auto& entry : library)
    if (normalize_caption(entry) == nq)
      return response("The query names the library entry '" + entry + "' exactly.", entry);

  const Strings q = canonical_tokens(query);
  const auto q_colors = color_sequence(q);
  const std::string* best = nullptr;
  double best_score = 0;
  for (const auto& entry : library) {
    const Strings e = canonical_tokens(entry);
    if (color_sequence(e) != q_colors) continue;
    double s = jaccard(q, e);
    if (s > best_score) {
      best = &entry;
      best_score = s;
    }
  }
  if (!best || best_score < kMinOverlap)
    return response("No library entry induces the configuration the query asks for.", "none");
  return response("The query and '" + *best + "' involve the same objects in the same roles and "
                      "describe the same configuration.",
                  *best);
}

// ---- analysis -------------------------------------------------------------

std::string analyze(const PromptBundle& b) {
  std::vector<double> returns;
  for (const auto& item : slot_list(b, label::kCurve)) returns.push_back(std::stod(item));
  std::string reasoning;
  bool yes = heuristic_converged(returns, AnalysisConfig{}, &reasoning);
  return response(reasoning, yes ? "YES" : "NO");
}

class MockBackend final : public Backend {
 public:
  std::string complete(const PromptBundle& bundle, const CallOptions& options) override {
    Rng rng(derive_seed(options.seed, {options.call_index, fnv1a64(kind_name(bundle.kind))}));
    switch (bundle.kind) {
      case PromptKind::Proposition: return propose(bundle, rng, options.temperature);
      case PromptKind::Decomposition: return decompose(bundle, rng, options.temperature);
      case PromptKind::Retrieval: return retrieve(bundle);
      case PromptKind::Analysis: return analyze(bundle);
    }
    return {};
  }
  std::string_view kind() const override { return "mock"; }
};

}  // namespace

std::unique_ptr<Backend> make_mock_backend() { return std::make_unique<MockBackend>(); }

}  // namespace autocurriculum
