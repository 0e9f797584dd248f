#include "autocurriculum/learner.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "autocurriculum/errors.hpp"
#include "flat_map.hpp"

namespace autocurriculum {

using nlohmann::json;

// ---- tabular core -----------------------------------------------------------

void fitted_q_sweep(const TabularData& data, double discount, QTable& q) {
  const std::size_t na = static_cast<std::size_t>(data.n_actions);
  // Scratch buffers survive across sweeps; fit calls this thousands of times.
  thread_local std::vector<double> value, sum, weight;
  value.resize(data.n_states);
  for (std::size_t s = 0; s < data.n_states; ++s)
    value[s] = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(s * na),
                                 q.begin() + static_cast<std::ptrdiff_t>((s + 1) * na));
  sum.assign(q.size(), 0.0);
  weight.assign(q.size(), 0.0);
  for (const Transition& t : data.transitions) {
    const std::size_t i = t.state * na + t.action;
    sum[i] += t.weight * (t.reward + discount * value[t.next_state]);
    weight[i] += t.weight;
  }
  for (std::size_t i = 0; i < q.size(); ++i)
    if (weight[i] > 0) q[i] = sum[i] / weight[i];
}

namespace {

// Transitions grouped by (state, action) with weights normalized inside each
// group, so one sweep is a single gather per transition. Built once per fit.
class CompiledTable {
 public:
  explicit CompiledTable(const TabularData& data) : n_states_(data.n_states), n_actions_(data.n_actions) {
    std::vector<std::size_t> order(data.transitions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t na = static_cast<std::size_t>(n_actions_);
    auto cell_of = [&](const Transition& t) { return t.state * na + t.action; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cell_of(data.transitions[a]) < cell_of(data.transitions[b]);
    });
    for (std::size_t k = 0; k < order.size();) {
      const std::size_t cell = cell_of(data.transitions[order[k]]);
      std::size_t end = k;
      double total = 0;
      while (end < order.size() && cell_of(data.transitions[order[end]]) == cell)
        total += data.transitions[order[end++]].weight;
      double reward = 0;
      cell_.push_back(cell);
      begin_.push_back(next_.size());
      for (; k < end; ++k) {
        const Transition& t = data.transitions[order[k]];
        const double share = t.weight / total;
        reward += share * t.reward;
        next_.push_back(t.next_state);
        share_.push_back(share);
      }
      reward_.push_back(reward);
    }
    begin_.push_back(next_.size());
  }

  void sweep(double discount, QTable& q) const {
    const std::size_t na = static_cast<std::size_t>(n_actions_);
    thread_local std::vector<double> value;
    value.resize(n_states_);
    for (std::size_t s = 0; s < n_states_; ++s) {
      const double* row = q.data() + s * na;
      value[s] = *std::max_element(row, row + na);
    }
    for (std::size_t g = 0; g < cell_.size(); ++g) {
      double future = 0;
      for (std::size_t i = begin_[g]; i < begin_[g + 1]; ++i) future += share_[i] * value[next_[i]];
      q[cell_[g]] = reward_[g] + discount * future;
    }
  }

 private:
  std::size_t n_states_;
  int n_actions_;
  std::vector<std::size_t> cell_, begin_;
  std::vector<std::uint32_t> next_;
  std::vector<double> share_, reward_;
};

}  // namespace

QTable fitted_q(const TabularData& data, double discount, int sweeps) {
  for (const Transition& t : data.transitions)
    if (t.state >= data.n_states || t.next_state >= data.n_states ||
        t.action >= data.n_actions || !(t.weight > 0))
      throw DataError("transition outside the declared state/action space");
  QTable q(data.n_states * static_cast<std::size_t>(data.n_actions), 0.0);
  const CompiledTable table(data);
  for (int i = 0; i < sweeps; ++i) table.sweep(discount, q);
  return q;
}

// ---- policy -----------------------------------------------------------------

Action greedy_action(const QRow& row) {
  int best = 0;
  for (int a = 1; a < kNumActions; ++a)
    if (row[a] > row[best]) best = a;
  return static_cast<Action>(best);
}

std::vector<std::string> Policy::captions() const {
  std::vector<std::string> out;
  for (const auto& t : tables_) out.push_back(t.caption);
  return out;
}

const Policy::Table* Policy::find(std::string_view caption) const {
  for (const auto& t : tables_)
    if (t.caption == caption) return &t;
  return nullptr;
}

const Policy::Table& Policy::at(std::string_view caption) const {
  if (const Table* t = find(caption)) return *t;
  throw UnknownSkillError("policy has no skill '" + std::string(caption) + "'");
}

const RewardId& Policy::reward_id(std::string_view caption) const { return at(caption).reward_id; }

std::size_t Policy::table_size(std::string_view caption) const { return at(caption).rows.size(); }

void Policy::set_table(const std::string& caption, const RewardId& id,
                       std::unordered_map<std::uint64_t, QRow> rows) {
  for (auto& t : tables_)
    if (t.caption == caption) {
      t.reward_id = id;
      t.rows = std::move(rows);
      return;
    }
  tables_.push_back({caption, id, std::move(rows)});
}

QRow Policy::values(std::string_view caption, const WorldState& state) const {
  const Table& t = at(caption);
  for (int level = 0; level < abstraction_.levels(); ++level) {
    auto it = t.rows.find(abstract_key(state, t.reward_id, abstraction_, level));
    if (it != t.rows.end()) return it->second;
  }
  return QRow{};
}

Action Policy::greedy(std::string_view caption, const WorldState& state) const {
  return greedy_action(values(caption, state));
}

void Policy::adopt(const Policy& other, std::string_view caption) {
  if (!(other.abstraction_ == abstraction_))
    throw ConfigError("cannot merge policies with different abstractions");
  const Table& t = other.at(caption);
  set_table(t.caption, t.reward_id, t.rows);
}

bool Policy::operator==(const Policy& o) const {
  if (!(abstraction_ == o.abstraction_) || tables_.size() != o.tables_.size()) return false;
  for (std::size_t i = 0; i < tables_.size(); ++i)
    if (tables_[i].caption != o.tables_[i].caption ||
        !(tables_[i].reward_id == o.tables_[i].reward_id) || tables_[i].rows != o.tables_[i].rows)
      return false;
  return true;
}

namespace {

constexpr int kPolicyVersion = 1;
constexpr std::size_t kRowBytes = sizeof(std::uint64_t) + sizeof(double) * kNumActions;

json abstraction_json(const AbstractionConfig& a) {
  return {{"xy_clamps", a.xy_clamps}, {"z_clamp", a.z_clamp}, {"lift_height", a.lift_height}};
}

}  // namespace

void Policy::save(const std::filesystem::path& path) const {
  json header{{"format", "autocurriculum-policy"},
              {"version", kPolicyVersion},
              {"abstraction", abstraction_json(abstraction_)},
              {"skills", json::array()}};
  for (const auto& t : tables_)
    header["skills"].push_back(
        {{"caption", t.caption}, {"reward_id", t.reward_id.to_string()}, {"rows", t.rows.size()}});
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write policy checkpoint " + path.string());
  out << header.dump() << '\n';
  for (const auto& t : tables_) {
    std::vector<std::uint64_t> keys;
    keys.reserve(t.rows.size());
    for (const auto& [k, row] : t.rows) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    char buf[kRowBytes];
    for (std::uint64_t k : keys) {
      std::memcpy(buf, &k, sizeof k);
      std::memcpy(buf + sizeof k, t.rows.at(k).data(), sizeof(double) * kNumActions);
      out.write(buf, kRowBytes);
    }
  }
  if (!out) throw DataError("failed writing policy checkpoint " + path.string());
}

Policy Policy::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read policy checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError("policy checkpoint header is not JSON: " + std::string(e.what()));
  }
  if (header.value("format", "") != "autocurriculum-policy")
    throw DataError("not a policy checkpoint: " + path.string());
  if (header.value("version", 0) != kPolicyVersion)
    throw DataError("unsupported policy checkpoint version in " + path.string());
  AbstractionConfig a;
  const auto& aj = header.at("abstraction");
  a.xy_clamps = aj.at("xy_clamps").get<std::vector<int>>();
  a.z_clamp = aj.at("z_clamp").get<int>();
  a.lift_height = aj.at("lift_height").get<bool>();
  Policy p(a);
  for (const auto& s : header.at("skills")) {
    std::unordered_map<std::uint64_t, QRow> rows;
    const auto n = s.at("rows").get<std::size_t>();
    rows.reserve(n);
    char buf[kRowBytes];
    for (std::size_t i = 0; i < n; ++i) {
      if (!in.read(buf, kRowBytes)) throw DataError("truncated policy checkpoint " + path.string());
      std::uint64_t k;
      QRow row;
      std::memcpy(&k, buf, sizeof k);
      std::memcpy(row.data(), buf + sizeof k, sizeof(double) * kNumActions);
      rows.emplace(k, row);
    }
    p.set_table(s.at("caption").get<std::string>(),
                RewardId::parse(s.at("reward_id").get<std::string>()), std::move(rows));
  }
  return p;
}

Action act(const Policy& policy, const WorldState& state, std::string_view caption,
           double epsilon, Rng& rng) {
  QRow row = policy.values(caption, state);  // validates the caption first
  if (epsilon > 0 && uniform_unit(rng) < epsilon)
    return static_cast<Action>(uniform_index(rng, kNumActions));
  return greedy_action(row);
}

// ---- training ---------------------------------------------------------------

void TrainConfig::check() const {
  if (!(discount > 0 && discount < 1)) throw ConfigError("discount must lie in (0, 1)");
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (eval_interval < 1) throw ConfigError("eval_interval must be positive");
  if (updates_per_sweep < 1) throw ConfigError("updates_per_sweep must be positive");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be positive");
  if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("epsilon must lie in [0, 1]");
  if (segment_steps < 1) throw ConfigError("segment_steps must be positive");
  if (eval_max_steps != static_cast<int>(kMaxReturn))
    throw ConfigError("eval_max_steps must be 400 so returns share the analysis scale");
  abstraction.check();
  rewards.check();
}

std::uint64_t eval_seed(std::uint64_t seed, std::uint64_t index) {
  return derive_seed(seed, {0xe7a1ULL, index});
}

namespace {

// Greedy rollout return using a table that is still being trained.
template <typename Lookup>
double rollout_return(const Lookup& lookup, std::uint64_t reset_seed, const RewardFn& reward_fn,
                      int max_steps) {
  WorldState s = reset(reset_seed);
  double total = 0;
  for (int t = 0; t < max_steps; ++t) {
    s = step(s, greedy_action(lookup(s)));
    total += std::clamp(reward_fn(s), 0.0, 1.0);
  }
  return total;
}

template <typename Lookup>
double mean_return(const Lookup& lookup, int episodes, std::uint64_t seed,
                   const RewardFn& reward_fn, int max_steps) {
  if (episodes <= 0) return 0;
  double sum = 0;
  for (int i = 0; i < episodes; ++i)
    sum += rollout_return(lookup, eval_seed(seed, static_cast<std::uint64_t>(i)), reward_fn,
                          max_steps);
  return sum / episodes;
}

}  // namespace

double evaluate(const Policy& policy, std::string_view caption, int episodes, std::uint64_t seed,
                const RewardFn& reward_fn, int max_steps) {
  if (!policy.has(caption))
    throw UnknownSkillError("policy has no skill '" + std::string(caption) + "'");
  auto lookup = [&](const WorldState& s) { return policy.values(caption, s); };
  return mean_return(lookup, episodes, seed, reward_fn, max_steps);
}

double evaluate(const Policy& policy, std::string_view caption, int episodes, std::uint64_t seed,
                const RewardParams& params, int max_steps) {
  const RewardId id = policy.reward_id(caption);
  return evaluate(
      policy, caption, episodes, seed,
      [&](const WorldState& s) { return reward(id, s, params); }, max_steps);
}

namespace {

// Lossless 54-bit packing of an in-bounds state.
std::uint64_t pack_state(const WorldState& s) {
  std::uint64_t k = 0;
  auto put = [&](std::uint64_t v, int bits) { k = (k << bits) | (v & ((1ULL << bits) - 1)); };
  for (const Cell& c : s.objects) {
    put(static_cast<std::uint64_t>(c.x), 4);
    put(static_cast<std::uint64_t>(c.y), 4);
    put(static_cast<std::uint64_t>(c.z), 4);
  }
  put(static_cast<std::uint64_t>(s.tcp.x), 4);
  put(static_cast<std::uint64_t>(s.tcp.y), 4);
  put(static_cast<std::uint64_t>(s.tcp.z), 4);
  put(static_cast<std::uint64_t>(s.aperture_steps), 3);
  put(s.grasp_sensor ? 1 : 0, 1);
  put(s.held ? static_cast<std::uint64_t>(*s.held) + 1 : 0, 2);
  return k;
}

std::uint64_t transition_key(std::uint32_t s, std::uint8_t a, std::uint32_t next) {
  return (static_cast<std::uint64_t>(s) << 35) | (static_cast<std::uint64_t>(a) << 32) |
         static_cast<std::uint64_t>(next);
}

// Distinct logged (s, a, s') triples over raw states, shared by every skill.
struct RawData {
  std::vector<WorldState> states;
  struct Step {
    std::uint32_t state, next;
    std::uint8_t action;
    double weight = 0;
  };
  std::vector<Step> steps;
  std::vector<std::vector<std::uint32_t>> step_of;  // [episode][t] -> index into steps
};

RawData index_raw(const WeightedEpisodes& data) {
  RawData raw;
  detail::FlatMap<std::uint32_t> state_ids, step_ids;
  auto state_id = [&](const WorldState& s) {
    for (const Cell* c : {&s.objects[0], &s.objects[1], &s.objects[2], &s.tcp})
      if (!c->in_bounds()) throw DataError("logged state lies outside the lattice");
    auto [slot, inserted] = state_ids.try_emplace(pack_state(s), static_cast<std::uint32_t>(raw.states.size()));
    if (inserted) raw.states.push_back(s);
    return *slot;
  };
  raw.step_of.resize(data.episodes.size());
  std::vector<std::uint32_t> ids;
  for (std::size_t e = 0; e < data.episodes.size(); ++e) {
    const Episode& ep = *data.episodes[e];
    if (ep.states.size() != ep.length() + 1)
      throw DataError("episode " + ep.id + " has inconsistent lengths");
    const std::vector<double>* w = data.step_weights.empty() ? nullptr : &data.step_weights[e];
    if (w && w->size() != ep.length())
      throw DataError("episode " + ep.id + " has the wrong number of step weights");
    ids.clear();
    for (const WorldState& st : ep.states) ids.push_back(state_id(st));
    auto& out = raw.step_of[e];
    out.reserve(ep.length());
    for (std::size_t t = 0; t < ep.length(); ++t) {
      const auto a = static_cast<std::uint8_t>(ep.actions[t]);
      auto [slot, inserted] = step_ids.try_emplace(transition_key(ids[t], a, ids[t + 1]),
                                                   static_cast<std::uint32_t>(raw.steps.size()));
      if (inserted) raw.steps.push_back({ids[t], ids[t + 1], a, 0.0});
      raw.steps[*slot].weight += w ? (*w)[t] : 1.0;
      out.push_back(*slot);
    }
  }
  return raw;
}

}  // namespace

FitResult fit(const WeightedEpisodes& data, const SkillLibrary& library, const TrainConfig& config,
              const FitHooks& hooks) {
  config.check();
  if (!data.step_weights.empty() && data.step_weights.size() != data.episodes.size())
    throw DataError("step weights must be given for every episode or none");
  FitResult result{Policy(config.abstraction), {}};
  constexpr std::size_t na = kNumActions;
  const RawData raw = index_raw(data);
  const int images = config.augment_symmetries ? kSymmetries : 1;

  for (const SkillSpec& skill : library.all()) {
    const RewardId id = skill.reward_id;
    const int levels = config.abstraction.levels();

    // Weighted reward sum of every distinct raw transition for this skill.
    std::vector<double> reward_sum(raw.steps.size(), 0.0);
    for (std::size_t e = 0; e < data.episodes.size(); ++e) {
      const Episode& ep = *data.episodes[e];
      const RewardChannel* ch = ep.channel(skill.caption);
      if (!ch)
        throw DataError("episode " + ep.id + " has no reward channel for skill '" +
                        skill.caption + "'; relabel the data first");
      if (ch->values.size() != ep.length())
        throw DataError("episode " + ep.id + " has inconsistent lengths");
      const std::vector<double>* w = data.step_weights.empty() ? nullptr : &data.step_weights[e];
      for (std::size_t t = 0; t < ep.length(); ++t)
        reward_sum[raw.step_of[e][t]] += (w ? (*w)[t] : 1.0) * ch->values[t];
    }

    // One tabular problem per abstraction level over the same transitions.
    struct Level {
      detail::FlatMap<std::uint32_t> index;
      std::vector<std::uint64_t> keys;
      TabularData tab;
      QTable q;
      std::vector<bool> covered;
    };
    std::vector<Level> lv(static_cast<std::size_t>(levels));
    std::vector<CompiledTable> compiled;

    // Transitions that land on the same abstract (s, a, s') are merged: their
    // weights add and the reward becomes the weighted mean, which leaves every
    // backup unchanged.
    struct Merged {
      double weight = 0;
      double reward_sum = 0;
    };
    std::vector<std::uint32_t> abstract(raw.states.size());
    for (int level = 0; level < levels; ++level) {
      Level& l = lv[static_cast<std::size_t>(level)];
      detail::FlatMap<Merged> merged;
      for (int g = 0; g < images; ++g) {
        for (std::size_t i = 0; i < raw.states.size(); ++i) {
          const WorldState& st = raw.states[i];
          const std::uint64_t k =
              abstract_key(g ? mirrored(st, g) : st, id, config.abstraction, level);
          auto [slot, inserted] = l.index.try_emplace(k, static_cast<std::uint32_t>(l.keys.size()));
          if (inserted) l.keys.push_back(k);
          abstract[i] = *slot;
        }
        for (std::size_t r = 0; r < raw.steps.size(); ++r) {
          const RawData::Step& st = raw.steps[r];
          if (!(st.weight > 0)) continue;
          const auto a = static_cast<std::uint8_t>(mirrored(static_cast<Action>(st.action), g));
          Merged& m = *merged.try_emplace(transition_key(abstract[st.state], a, abstract[st.next])).first;
          m.weight += st.weight;
          m.reward_sum += reward_sum[r];
        }
      }
      if (l.keys.size() >= (1ULL << 28))
        throw DataError("abstraction produced too many distinct states for '" + skill.caption + "'");
      // Sorting by key groups transitions by (s, a), which keeps sweeps cache friendly.
      std::vector<std::pair<std::uint64_t, Merged>> items;
      items.reserve(merged.size());
      merged.for_each([&](std::uint64_t k, const Merged& m) { items.emplace_back(k, m); });
      std::sort(items.begin(), items.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      auto& out = l.tab.transitions;
      out.reserve(items.size());
      for (const auto& [k, m] : items)
        out.push_back({static_cast<std::uint32_t>(k >> 35), static_cast<std::uint8_t>((k >> 32) & 7),
                       m.reward_sum / m.weight, static_cast<std::uint32_t>(k & 0xffffffffULL),
                       m.weight});
    }
    for (Level& l : lv) {
      l.tab.n_states = l.keys.size();
      l.tab.n_actions = kNumActions;
      l.q.assign(l.tab.n_states * na, 0.0);
    }

    // A key only counts as known when some logged transition leaves it.
    for (Level& l : lv) {
      l.covered.assign(l.tab.n_states, false);
      for (const Transition& t : l.tab.transitions) l.covered[t.state] = true;
      compiled.emplace_back(l.tab);
      l.tab.transitions = {};
    }
    auto lookup = [&](const WorldState& s) {
      QRow row{};
      for (int level = 0; level < levels; ++level) {
        const Level& l = lv[static_cast<std::size_t>(level)];
        const std::uint32_t* i = l.index.find(abstract_key(s, id, config.abstraction, level));
        if (!i || !l.covered[*i]) continue;
        std::copy_n(l.q.begin() + static_cast<std::ptrdiff_t>(*i * na), na, row.begin());
        break;
      }
      return row;
    };
    RewardFn reward_fn = [&](const WorldState& s) { return reward(id, s, config.rewards); };

    LearningCurve curve{skill.caption, {}};
    for (int it = 1; it <= config.iterations; ++it) {
      for (std::size_t i = 0; i < lv.size(); ++i) compiled[i].sweep(config.discount, lv[i].q);
      if (hooks.progress) hooks.progress(skill.caption, it);
      if (it % config.eval_interval != 0) continue;
      double ret =
          mean_return(lookup, config.eval_episodes, config.seed, reward_fn, config.eval_max_steps);
      curve.points.push_back({static_cast<std::uint64_t>(it) * config.updates_per_sweep, ret});
      if (hooks.stop && hooks.stop(curve)) break;
    }

    std::unordered_map<std::uint64_t, QRow> rows;
    for (const Level& l : lv)
      for (std::size_t s = 0; s < l.tab.n_states; ++s) {
        if (!l.covered[s]) continue;
        QRow row;
        std::copy_n(l.q.begin() + static_cast<std::ptrdiff_t>(s * na), na, row.begin());
        rows.emplace(l.keys[s], row);
      }
    result.policy.set_table(skill.caption, id, std::move(rows));
    result.curves.push_back(std::move(curve));
  }
  return result;
}

}  // namespace autocurriculum
