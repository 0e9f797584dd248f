#include "autocurriculum/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "autocurriculum/errors.hpp"

namespace autocurriculum {

using nlohmann::json;

namespace {

constexpr const char* kShardFormat = "autocurriculum-episodes";

json encode_state(const WorldState& s) {
  json a = json::array();
  for (const Cell& c : s.objects) a.insert(a.end(), {c.x, c.y, c.z});
  a.insert(a.end(), {s.tcp.x, s.tcp.y, s.tcp.z, s.aperture_steps, s.grasp_sensor ? 1 : 0,
                     s.held ? static_cast<int>(*s.held) : -1});
  return a;
}

WorldState decode_state(const json& a) {
  if (!a.is_array() || a.size() != 15) throw DataError("state record must hold 15 integers");
  std::array<int, 15> v{};
  for (std::size_t i = 0; i < 15; ++i) v[i] = a[i].get<int>();
  WorldState s;
  for (int i = 0; i < 3; ++i) s.objects[i] = Cell{v[3 * i], v[3 * i + 1], v[3 * i + 2]};
  s.tcp = Cell{v[9], v[10], v[11]};
  s.aperture_steps = v[12];
  s.grasp_sensor = v[13] != 0;
  if (v[14] >= 0) {
    if (v[14] > 2) throw DataError("held object index out of range");
    s.held = static_cast<Color>(v[14]);
  }
  if (auto why = validate(s)) throw DataError("invalid state: " + *why);
  return s;
}

json header_record(const SkillLibrary& library) {
  json skills = json::array();
  for (const auto& s : library.all())
    skills.push_back({{"caption", s.caption}, {"reward_id", s.reward_id.to_string()}});
  return {{"format", kShardFormat}, {"version", kShardVersion}, {"library", skills}};
}

SkillLibrary parse_header(const std::string& line, const std::filesystem::path& path) {
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw DataError("shard " + path.string() + " has no readable header");
  }
  if (!h.is_object() || h.value("format", "") != kShardFormat)
    throw DataError("not an episode shard: " + path.string());
  if (h.value("version", 0) != kShardVersion)
    throw DataError("unsupported shard version in " + path.string());
  SkillLibrary lib;
  for (const auto& s : h.at("library"))
    lib.add_skill({s.at("caption").get<std::string>(),
                   RewardId::parse(s.at("reward_id").get<std::string>()), false});
  return lib;
}

}  // namespace

std::string encode_episode(const Episode& e) {
  if (auto why = e.check()) throw DataError("episode " + e.id + ": " + *why);
  std::string actions;
  actions.reserve(e.actions.size());
  for (Action a : e.actions) actions.push_back(static_cast<char>('0' + static_cast<int>(a)));
  json segments = json::array();
  for (const auto& s : e.segments) segments.push_back({s.caption, s.start, s.end});
  json states = json::array();
  for (const auto& s : e.states) states.push_back(encode_state(s));
  json rec{{"id", e.id},
           {"seed", e.seed},
           {"source", source_name(e.source)},
           {"success", e.success},
           {"note", e.note},
           {"segments", segments},
           {"actions", actions},
           {"states", states}};
  return rec.dump();
}

Episode decode_episode(std::string_view line) {
  try {
    json r = json::parse(line);
    Episode e;
    e.id = r.at("id").get<std::string>();
    e.seed = r.at("seed").get<std::uint64_t>();
    auto src = parse_source(r.at("source").get<std::string>());
    if (!src) throw DataError("unknown episode source");
    e.source = *src;
    e.success = r.at("success").get<bool>();
    e.note = r.value("note", "");
    for (const auto& s : r.at("segments"))
      e.segments.push_back({s.at(0).get<std::string>(), s.at(1).get<std::size_t>(),
                            s.at(2).get<std::size_t>()});
    for (char c : r.at("actions").get<std::string>()) {
      if (c < '0' || c >= '0' + kNumActions) throw DataError("bad action code");
      e.actions.push_back(static_cast<Action>(c - '0'));
    }
    for (const auto& s : r.at("states")) e.states.push_back(decode_state(s));
    if (auto why = e.check()) throw DataError(*why);
    return e;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed episode record: ") + ex.what());
  }
}

EpisodeWriter::EpisodeWriter(std::filesystem::path path, const SkillLibrary& library)
    : path_(std::move(path)) {
  const std::string header = header_record(library).dump();
  std::error_code ec;
  if (std::filesystem::exists(path_, ec) && std::filesystem::file_size(path_, ec) > 0) {
    std::ifstream in(path_);
    std::string first;
    std::getline(in, first);
    if (first != header)
      throw DataError("shard " + path_.string() + " was written under a different library");
    return;
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::trunc);
  if (!(out << header << '\n')) throw DataError("cannot create shard " + path_.string());
}

void EpisodeWriter::append(const Episode& episode) {
  const std::string line = encode_episode(episode);
  std::ofstream out(path_, std::ios::app);
  if (!(out << line << '\n') || !out.flush())
    throw DataError("cannot append to shard " + path_.string());
  ++appended_;
}

bool EpisodeFilter::matches(const Episode& e) const {
  if (source && e.source != *source) return false;
  if (success && e.success != *success) return false;
  if (skill) {
    bool found = false;
    for (const auto& s : e.segments) found = found || s.caption == *skill;
    if (!found) return false;
  }
  return true;
}

std::vector<std::filesystem::path> list_shards(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".ndjson")
        out.push_back(entry.path());
    std::sort(out.begin(), out.end());
  } else if (std::filesystem::exists(path)) {
    out.push_back(path);
  } else {
    throw DataError("episode store " + path.string() + " does not exist");
  }
  return out;
}

LoadResult load_episodes(const std::filesystem::path& path, const EpisodeFilter& filter,
                         const RewardParams& params) {
  LoadResult result;
  for (const auto& shard : list_shards(path)) {
    std::ifstream in(shard);
    if (!in) throw DataError("cannot read shard " + shard.string());
    std::string line;
    if (!std::getline(in, line)) continue;  // empty file: nothing written yet
    const SkillLibrary lib = parse_header(line, shard);
    for (const auto& s : lib.all())
      if (!result.library.contains(s.caption)) result.library.add_skill(s);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Episode e;
      try {
        e = decode_episode(line);
      } catch (const DataError&) {
        ++result.corrupt;
        continue;
      }
      if (!filter.matches(e)) continue;
      result.episodes.push_back(relabel(std::move(e), lib, params));
    }
  }
  return result;
}

// ---- mixing -------------------------------------------------------------------

void SamplerConfig::check(std::size_t datasets) const {
  if (shares.size() != datasets)
    throw ConfigError("sampler needs one share per dataset (" + std::to_string(datasets) +
                      "), got " + std::to_string(shares.size()));
  double total = 0;
  for (double s : shares) {
    if (!(s >= 0)) throw ConfigError("dataset shares must be non-negative");
    total += s;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("dataset shares must sum to 1");
  if (!(upweight_fraction > 0 && upweight_fraction < 1))
    throw ConfigError("upweight_fraction must lie in (0, 1)");
}

namespace {

bool is_up(const Segment& seg, const std::set<std::string>& up) { return up.count(seg.caption) > 0; }

void require_nonempty(const std::vector<const Dataset*>& datasets, const SamplerConfig& config) {
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    bool any = false;
    for (const auto& e : datasets[d]->episodes) any = any || e.length() > 0;
    if (config.shares[d] > 0 && !any)
      throw DataError("dataset '" + datasets[d]->name + "' has a share but no transitions");
  }
}

// Splits each dataset's steps into up-weighted and remaining pools. A dataset
// without one of the two kinds is sampled uniformly.
struct Split {
  std::size_t up = 0, rest = 0;
};

Split count_split(const Dataset& d, const std::set<std::string>& up) {
  Split s;
  for (const auto& e : d.episodes)
    for (const auto& seg : e.segments) (is_up(seg, up) ? s.up : s.rest) += seg.end - seg.start;
  return s;
}

}  // namespace

MixedSampler::MixedSampler(const std::vector<const Dataset*>& datasets, SamplerConfig config,
                           std::uint64_t seed)
    : config_(std::move(config)), rng_(derive_seed(seed, {0x5a3ULL})) {
  config_.check(datasets.size());
  require_nonempty(datasets, config_);
  const std::set<std::string> up(config_.upweighted.begin(), config_.upweighted.end());
  double acc = 0;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    Source src;
    const auto& eps = datasets[d]->episodes;
    for (std::size_t e = 0; e < eps.size(); ++e)
      for (const auto& seg : eps[e].segments)
        for (std::size_t t = seg.start; t < seg.end; ++t)
          (is_up(seg, up) ? src.up : src.rest)
              .steps.emplace_back(static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(t));
    sources_.push_back(std::move(src));
    acc += config_.shares[d];
    cumulative_.push_back(acc);
  }
}

TransitionRef MixedSampler::next() {
  const double u = uniform_unit(rng_) * cumulative_.back();
  std::size_t d = 0;
  while (d + 1 < cumulative_.size() && (u >= cumulative_[d] || config_.shares[d] == 0)) ++d;
  const Source& src = sources_[d];
  const Pool* pool = &src.rest;
  if (src.up.steps.empty()) {
    pool = &src.rest;
  } else if (src.rest.steps.empty()) {
    pool = &src.up;
  } else if (uniform_unit(rng_) < config_.upweight_fraction) {
    pool = &src.up;
  }
  const auto [e, t] = pool->steps[uniform_index(rng_, pool->steps.size())];
  return {d, e, t};
}

std::vector<std::vector<std::vector<double>>> inclusion_weights(
    const std::vector<const Dataset*>& datasets, const SamplerConfig& config) {
  config.check(datasets.size());
  require_nonempty(datasets, config);
  const std::set<std::string> up(config.upweighted.begin(), config.upweighted.end());
  std::vector<std::vector<std::vector<double>>> out(datasets.size());
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const Split split = count_split(*datasets[d], up);
    double w_up = 0, w_rest = 0;
    if (split.up == 0 || split.rest == 0) {
      const double n = static_cast<double>(split.up + split.rest);
      w_up = w_rest = n > 0 ? config.shares[d] / n : 0;
    } else {
      w_up = config.shares[d] * config.upweight_fraction / static_cast<double>(split.up);
      w_rest = config.shares[d] * (1 - config.upweight_fraction) / static_cast<double>(split.rest);
    }
    for (const auto& e : datasets[d]->episodes) {
      std::vector<double> w(e.length(), 0.0);
      for (const auto& seg : e.segments)
        for (std::size_t t = seg.start; t < seg.end; ++t) w[t] = is_up(seg, up) ? w_up : w_rest;
      out[d].push_back(std::move(w));
    }
  }
  return out;
}

WeightedEpisodes weighted_union(const std::vector<const Dataset*>& datasets,
                                const SamplerConfig& config) {
  auto weights = inclusion_weights(datasets, config);
  WeightedEpisodes out;
  for (std::size_t d = 0; d < datasets.size(); ++d)
    for (std::size_t e = 0; e < datasets[d]->episodes.size(); ++e) {
      out.episodes.push_back(&datasets[d]->episodes[e]);
      out.step_weights.push_back(std::move(weights[d][e]));
    }
  return out;
}

}  // namespace autocurriculum
