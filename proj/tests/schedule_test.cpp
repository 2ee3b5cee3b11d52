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

#include <gtest/gtest.h>

#include <random>

#include "cavsim/schedule.hpp"
#include "schedule_oracle.hpp"

namespace cavsim {
namespace {

ScheduleProblem make(std::vector<double> w)
{
  ScheduleProblem p;
  for (std::size_t n = 0; n < w.size(); ++n) p.ids.push_back(static_cast<int>(n + 1));
  p.weights = std::move(w);
  return p;
}

TEST(Schedule, HeaviestWeightTakesTheLastSlot)
{
  const auto r = solve_schedule(make({0.9, 0.1, 0.5}));
  EXPECT_TRUE(r.exact);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.index, (std::map<int, int>{{1, 3}, {2, 1}, {3, 2}}));
  EXPECT_NEAR(r.objective, 0.9 * 3 + 0.1 * 1 + 0.5 * 2, 1e-12);
}

TEST(Schedule, EqualWeightsKeepTheCurrentOrder)
{
  auto p = make({0.3, 0.3, 0.3, 0.3});
  p.k_min = 4;
  const auto r = solve_schedule(p);
  EXPECT_EQ(r.index, (std::map<int, int>{{1, 4}, {2, 5}, {3, 6}, {4, 7}}));
}

TEST(Schedule, PrecedenceHoldsAgainstWeights)
{
  auto p = make({0.9, 0.0, 0.0});
  p.precedence = {{1, 2}};
  const auto r = solve_schedule(p);
  EXPECT_TRUE(satisfies_precedence(p, r.index));
  EXPECT_EQ(r.index.at(1), 2);
  EXPECT_EQ(r.index.at(2), 3);
}

TEST(Schedule, GapOfTwoIsFeasibleOnlyWithRoom)
{
  auto p = make({0.0, 0.0, 0.0});
  p.nu = 2;
  p.precedence = {{1, 2}, {2, 3}};
  const auto r = solve_schedule(p);
  EXPECT_FALSE(r.feasible);
  p.precedence = {{1, 2}};
  const auto ok = solve_schedule(p);
  EXPECT_TRUE(ok.feasible);
  EXPECT_GE(ok.index.at(2) - ok.index.at(1), 2);
}

TEST(Schedule, RejectsMalformedProblems)
{
  auto cyc = make({0.1, 0.2});
  cyc.precedence = {{1, 2}, {2, 1}};
  EXPECT_THROW(solve_schedule(cyc), std::invalid_argument);
  auto self = make({0.1});
  self.precedence = {{1, 1}};
  EXPECT_THROW(solve_schedule(self), std::invalid_argument);
  auto unknown = make({0.1});
  unknown.precedence = {{1, 7}};
  EXPECT_THROW(solve_schedule(unknown), std::invalid_argument);
  auto sizes = make({0.1, 0.2});
  sizes.weights.pop_back();
  EXPECT_THROW(solve_schedule(sizes), std::invalid_argument);
  auto dup = make({0.1, 0.2});
  dup.ids[1] = dup.ids[0];
  EXPECT_THROW(solve_schedule(dup), std::invalid_argument);
}

TEST(Schedule, EmptyProblemIsTrivial)
{
  const auto r = solve_schedule(ScheduleProblem{});
  EXPECT_TRUE(r.index.empty());
  EXPECT_TRUE(r.feasible);
}

TEST(Schedule, MatchesBruteForce)
{
  std::mt19937_64 rng(20240611);
  for (int n = 0; n < 300; ++n) {
    const auto p = testing::random_problem(rng, 7);
    const auto bf = testing::brute_force_schedule(p);
    const auto r = solve_schedule(p);
    ASSERT_EQ(r.feasible, bf.index.has_value()) << "instance " << n;
    if (!bf.index) continue;
    EXPECT_TRUE(satisfies_precedence(p, r.index));
    EXPECT_NEAR(r.objective, bf.objective, 1e-9) << "instance " << n;
    // Ties resolve to the same order as the lexicographic enumeration.
    EXPECT_EQ(r.index, *bf.index) << "instance " << n;
  }
}

TEST(Schedule, LargeProblemsFallBackToAFeasibleGreedyOrder)
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScheduleProblem p;
  for (int n = 0; n < 16; ++n) {
    p.ids.push_back(n + 1);
    p.weights.push_back(unit(rng));
  }
  for (int n = 1; n < 16; n += 3) p.precedence.emplace_back(n, n + 1);
  const auto r = solve_schedule(p);
  EXPECT_FALSE(r.exact);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(satisfies_precedence(p, r.index));
  EXPECT_EQ(r.index.size(), 16u);
  // The greedy order never does worse than leaving the queue as it is.
  std::map<int, int> identity;
  for (int n = 1; n <= 16; ++n) identity[n] = n;
  EXPECT_GE(r.objective, schedule_objective(p, identity) - 1e-12);
}

}  // namespace
}  // namespace cavsim
