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

#include "cavsim/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace cavsim {

namespace {

struct Graph
{
  std::vector<std::vector<int>> preds;  // by candidate position
  std::vector<std::vector<int>> succs;
};

Graph build_graph(const ScheduleProblem& p)
{
  std::map<int, int> pos;
  for (std::size_t n = 0; n < p.ids.size(); ++n) {
    if (!pos.emplace(p.ids[n], static_cast<int>(n)).second)
      throw std::invalid_argument("schedule: duplicate candidate id " + std::to_string(p.ids[n]));
  }
  Graph g;
  g.preds.resize(p.ids.size());
  g.succs.resize(p.ids.size());
  for (const auto& [before, after] : p.precedence) {
    auto b = pos.find(before), a = pos.find(after);
    if (b == pos.end() || a == pos.end())
      throw std::invalid_argument("schedule: precedence refers to a non-candidate");
    if (b->second == a->second) throw std::invalid_argument("schedule: self precedence");
    g.preds[a->second].push_back(b->second);
    g.succs[b->second].push_back(a->second);
  }
  // Kahn's algorithm for cycle detection.
  std::vector<int> indeg(p.ids.size());
  for (std::size_t n = 0; n < p.ids.size(); ++n) indeg[n] = static_cast<int>(g.preds[n].size());
  std::vector<int> ready;
  for (std::size_t n = 0; n < p.ids.size(); ++n)
    if (indeg[n] == 0) ready.push_back(static_cast<int>(n));
  std::size_t seen = 0;
  while (!ready.empty()) {
    const int n = ready.back();
    ready.pop_back();
    ++seen;
    for (int s : g.succs[n])
      if (--indeg[s] == 0) ready.push_back(s);
  }
  if (seen != p.ids.size()) throw std::invalid_argument("schedule: precedence graph has a cycle");
  return g;
}

ScheduleResult from_order(const ScheduleProblem& p, const std::vector<int>& order)
{
  ScheduleResult r;
  for (std::size_t slot = 0; slot < order.size(); ++slot)
    r.index[p.ids[order[slot]]] = p.k_min + static_cast<int>(slot);
  r.objective = schedule_objective(p, r.index);
  return r;
}

ScheduleResult greedy(const ScheduleProblem& p, const Graph& g)
{
  // Fill the highest index first with the heaviest candidate whose successors
  // are all placed; equal weights keep the later candidate later.
  const std::size_t n = p.ids.size();
  std::vector<int> order(n);
  std::vector<bool> placed(n, false);
  for (std::size_t slot = n; slot-- > 0;) {
    int pick = -1;
    for (std::size_t c = n; c-- > 0;) {
      if (placed[c]) continue;
      bool ok = true;
      for (int s : g.succs[c]) ok = ok && placed[s];
      if (!ok) continue;
      if (pick < 0 || p.weights[c] > p.weights[pick]) pick = static_cast<int>(c);
    }
    placed[pick] = true;
    order[slot] = pick;
  }
  auto r = from_order(p, order);
  r.exact = false;
  r.feasible = satisfies_precedence(p, r.index);
  return r;
}

}  // namespace

double schedule_objective(const ScheduleProblem& problem, const std::map<int, int>& index)
{
  double sum = 0.0;
  for (std::size_t n = 0; n < problem.ids.size(); ++n)
    sum += problem.weights[n] * index.at(problem.ids[n]);
  return sum;
}

bool satisfies_precedence(const ScheduleProblem& problem, const std::map<int, int>& index)
{
  for (const auto& [before, after] : problem.precedence)
    if (index.at(after) - index.at(before) < problem.nu) return false;
  return true;
}

ScheduleResult solve_schedule(const ScheduleProblem& p)
{
  if (p.weights.size() != p.ids.size())
    throw std::invalid_argument("schedule: one weight per candidate required");
  if (p.nu < 1) throw std::invalid_argument("schedule: nu must be >= 1");
  for (double w : p.weights)
    if (!std::isfinite(w)) throw std::invalid_argument("schedule: weights must be finite");
  const Graph g = build_graph(p);
  const std::size_t n = p.ids.size();
  if (n == 0) return {};
  if (n > p.exact_cap) return greedy(p, g);

  std::vector<int> order(n, -1), best_order;
  std::vector<int> slot_of(n, -1);
  double best = -std::numeric_limits<double>::infinity();
  const double tol = 1e-12;

  // Upper bound on what the unplaced candidates can still add: heaviest
  // weight to the highest free index (rearrangement inequality).
  std::vector<double> scratch;
  auto bound = [&](std::size_t depth) {
    scratch.clear();
    for (std::size_t c = 0; c < n; ++c)
      if (slot_of[c] < 0) scratch.push_back(p.weights[c]);
    std::sort(scratch.begin(), scratch.end());
    double b = 0.0;
    for (std::size_t k = 0; k < scratch.size(); ++k)
      b += scratch[k] * (p.k_min + static_cast<double>(depth + k));
    return b;
  };

  std::function<void(std::size_t, double)> dfs = [&](std::size_t depth, double value) {
    if (depth == n) {
      if (best_order.empty() || value > best + tol * (1.0 + std::abs(best))) {
        best = value;
        best_order = order;
      }
      return;
    }
    if (!best_order.empty() && value + bound(depth) <= best + tol * (1.0 + std::abs(best)))
      return;
    for (std::size_t c = 0; c < n; ++c) {
      if (slot_of[c] >= 0) continue;
      bool ok = true;
      for (int pr : g.preds[c])
        ok = ok && slot_of[pr] >= 0 && static_cast<int>(depth) - slot_of[pr] >= p.nu;
      if (!ok) continue;
      slot_of[c] = static_cast<int>(depth);
      order[depth] = static_cast<int>(c);
      dfs(depth + 1, value + p.weights[c] * (p.k_min + static_cast<double>(depth)));
      slot_of[c] = -1;
    }
  };
  dfs(0, 0.0);

  if (best_order.empty()) {
    std::vector<int> identity(n);
    for (std::size_t c = 0; c < n; ++c) identity[c] = static_cast<int>(c);
    auto r = from_order(p, identity);
    r.feasible = false;
    return r;
  }
  return from_order(p, best_order);
}

}  // namespace cavsim
