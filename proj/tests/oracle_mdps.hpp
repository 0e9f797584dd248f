#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "autocurriculum/learner.hpp"

// Small fully covered MDPs with optimal action values frozen from
// tests/oracles/value_iteration.py.
namespace autocurriculum::oracle {

struct Outcome {
  std::uint32_t s;
  std::uint8_t a;
  double p, r;
  std::uint32_t next;
};

inline TabularData model(std::size_t states, int actions, const std::vector<Outcome>& outcomes) {
  TabularData d{states, actions, {}};
  for (const auto& o : outcomes) d.transitions.push_back({o.s, o.a, o.r, o.next, o.p});
  return d;
}

inline TabularData two_state() {
  return model(2, 2, {{0, 0, 1, 1, 0}, {0, 1, 1, 0, 1},
                      {1, 0, 0.5, 2, 0}, {1, 0, 0.5, 0, 1}, {1, 1, 1, 0.5, 1}});
}
inline const std::vector<std::vector<double>> kTwoStateQ{
    {9.999999999999995, 8.999999999999995},
    {9.999999999999995, 9.499999999999995},
};

inline TabularData five_state() {
  return model(5, 3,
               {{0, 0, 1, 0, 1},        {0, 1, 0.75, 0, 0},     {0, 1, 0.25, 0.1, 2},
                {0, 2, 1, -0.5, 4},     {1, 0, 1, 0, 2},        {1, 1, 0.5, 0.2, 0},
                {1, 1, 0.5, 0, 1},      {1, 2, 1.0 / 3, 1, 3},  {1, 2, 2.0 / 3, 0, 1},
                {2, 0, 1, 0, 3},        {2, 1, 1, 0.3, 2},      {2, 2, 0.2, 2, 4},
                {2, 2, 0.8, 0, 0},      {3, 0, 1, 1, 4},        {3, 1, 0.5, 0, 3},
                {3, 1, 0.5, 0.5, 2},    {3, 2, 1, 0, 0},        {4, 0, 1, 0.25, 4},
                {4, 1, 1, 0, 0},        {4, 2, 0.5, 1.5, 1},    {4, 2, 0.5, 0, 3}});
}
inline const std::vector<std::vector<double>> kFiveStateQ{
    {11.814755269739166, 11.477989907109654, 11.847624151482645},
    {12.046230796713086, 11.634999106823837, 12.436584494462281},
    {12.680242943908512, 12.346230796713087, 11.873719185423338},
    {13.347624151482645, 12.613236870310800, 11.255242943908511},
    {12.597624151482645, 11.255242943908511, 12.997499106823838},
};

/// Largest absolute gap between a table and the frozen values.
inline double max_gap(const QTable& q, const std::vector<std::vector<double>>& expected) {
  const std::size_t na = expected[0].size();
  if (q.size() != expected.size() * na) return INFINITY;
  double gap = 0;
  for (std::size_t s = 0; s < expected.size(); ++s)
    for (std::size_t a = 0; a < na; ++a) gap = std::max(gap, std::abs(q[s * na + a] - expected[s][a]));
  return gap;
}

}  // namespace autocurriculum::oracle
