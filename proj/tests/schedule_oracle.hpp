// Copyright 2026 The cavsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAVSIM_TESTS_SCHEDULE_ORACLE_HPP_
#define CAVSIM_TESTS_SCHEDULE_ORACLE_HPP_

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "cavsim/schedule.hpp"

namespace cavsim::testing {

struct BruteForceResult
{
  std::optional<std::map<int, int>> index;  // first optimal order, lexicographic in positions
  double objective = -std::numeric_limits<double>::infinity();
};

/// Enumerates every permutation in lexicographic order of current positions.
inline BruteForceResult brute_force_schedule(const ScheduleProblem& p)
{
  const std::size_t n = p.ids.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  BruteForceResult best;
  do {
    std::map<int, int> idx;
    for (std::size_t slot = 0; slot < n; ++slot)
      idx[p.ids[order[slot]]] = p.k_min + static_cast<int>(slot);
    if (!satisfies_precedence(p, idx)) continue;
    const double obj = schedule_objective(p, idx);
    if (!best.index || obj > best.objective + 1e-12) {
      best.index = idx;
      best.objective = obj;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

/// Random acyclic instance: precedence follows a hidden random order.
inline ScheduleProblem random_problem(std::mt19937_64& rng, std::size_t max_n)
{
  std::uniform_int_distribution<std::size_t> size(1, max_n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScheduleProblem p;
  const std::size_t n = size(rng);
  p.k_min = 1 + static_cast<int>(rng() % 4);
  p.nu = unit(rng) < 0.8 ? 1 : 2;
  const bool coarse = unit(rng) < 0.5;  // many ties
  for (std::size_t k = 0; k < n; ++k) {
    p.ids.push_back(static_cast<int>(10 + 3 * k));
    p.weights.push_back(coarse ? 0.5 * static_cast<double>(rng() % 3) : unit(rng));
  }
  std::vector<std::size_t> hidden(n);
  std::iota(hidden.begin(), hidden.end(), 0);
  std::shuffle(hidden.begin(), hidden.end(), rng);
  const double density = unit(rng) * 0.4;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (unit(rng) < density) p.precedence.emplace_back(p.ids[hidden[a]], p.ids[hidden[b]]);
  return p;
}

}  // namespace cavsim::testing

#endif  // CAVSIM_TESTS_SCHEDULE_ORACLE_HPP_
