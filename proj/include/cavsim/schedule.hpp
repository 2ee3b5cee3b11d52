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

#ifndef CAVSIM_SCHEDULE_HPP_
#define CAVSIM_SCHEDULE_HPP_

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

namespace cavsim {

/// Reassign indices k_min .. k_min + n - 1 to the candidates so that the sum
/// of weight * index is maximal, subject to index(after) - index(before) >= nu
/// for every precedence pair.
struct ScheduleProblem
{
  int k_min = 1;
  std::vector<int> ids;        // candidates in current index order
  std::vector<double> weights; // one per candidate
  std::vector<std::pair<int, int>> precedence;  // (before, after) by id
  int nu = 1;
  std::size_t exact_cap = 12;
};

struct ScheduleResult
{
  std::map<int, int> index;  // id -> new index
  double objective = 0.0;
  bool exact = true;         // false when the greedy fallback was used
  bool feasible = true;      // false when no order satisfies every pair
};

/// Exact branch and bound over permutations. Among optimal orders the one
/// that keeps the current relative order longest wins. Above `exact_cap`
/// candidates a greedy order is used instead. Throws std::invalid_argument on
/// malformed input or a cyclic precedence graph.
ScheduleResult solve_schedule(const ScheduleProblem& problem);

double schedule_objective(const ScheduleProblem& problem, const std::map<int, int>& index);
bool satisfies_precedence(const ScheduleProblem& problem, const std::map<int, int>& index);

}  // namespace cavsim

#endif  // CAVSIM_SCHEDULE_HPP_
