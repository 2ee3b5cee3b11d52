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

#include "cavsim/threats.hpp"

#include <algorithm>

namespace cavsim {

const char* to_string(AttackerModel m)
{
  switch (m) {
    case AttackerModel::Naive: return "naive";
    case AttackerModel::Strategic: return "strategic";
    case AttackerModel::DynamicsAware: return "dynamics_aware";
  }
  return "?";
}

std::vector<FakeSpawn> spawn_fakes(AttackerState& state, const AttackerSpec& spec, double t,
                                   int active_fakes)
{
  if (!spec.enabled) return {};
  std::vector<FakeSpawn> due = std::move(state.deferred);
  state.deferred.clear();
  while (state.next_spawn < spec.spawns.size() && spec.spawns[state.next_spawn].time <= t + 1e-9)
    due.push_back(spec.spawns[state.next_spawn++]);
  std::vector<FakeSpawn> out;
  for (auto& s : due) {
    if (active_fakes + static_cast<int>(out.size()) < spec.max_fake)
      out.push_back(s);
    else
      state.deferred.push_back(s);
  }
  return out;
}

FakeReport fake_report(const FakeAgent& agent, const AttackerSpec& spec)
{
  if (agent.model == AttackerModel::Naive) {
    // The position moves at the nominal speed, the reported speed wobbles.
    const double wobble = (agent.steps % 2 == 0 ? 1.0 : -1.0) * spec.naive_jitter;
    return {agent.state.x, std::max(0.0, agent.state.v + wobble), 0.0};
  }
  return {agent.state.x, agent.state.v, agent.u};
}

bool fake_reporting(const FakeAgent& agent, const AttackerSpec& spec, double t)
{
  if (spec.lifetime == FakeLifetime::TraverseAndExit) return true;
  return t - agent.spawn_time < spec.vanish_after;
}

double fake_cruise_speed(const FakeAgent& agent, const AttackerSpec& spec)
{
  switch (agent.model) {
    case AttackerModel::Naive: return spec.naive_speed;
    case AttackerModel::Strategic: return spec.strategic_speed;
    case AttackerModel::DynamicsAware: return spec.attack_speed;
  }
  return spec.strategic_speed;
}

void advance_fake(FakeAgent& agent, double u, double ts, const VehicleLimits& limits)
{
  ++agent.steps;
  if (agent.model == AttackerModel::Naive) {
    agent.state.x += agent.state.v * ts;
    agent.state.t += ts;
    agent.u = 0.0;
    return;
  }
  agent.u = std::clamp(u, limits.u_min, limits.u_max);
  agent.state = step(agent.state, agent.u, ts, limits);
}

std::optional<double> uncooperative_override(bool uncooperative, const UncooperativeSpec& spec,
                                             double v_low)
{
  if (!uncooperative) return std::nullopt;
  return std::min(spec.speed, v_low);
}

}  // namespace cavsim
