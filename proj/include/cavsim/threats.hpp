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

#ifndef CAVSIM_THREATS_HPP_
#define CAVSIM_THREATS_HPP_

#include <optional>
#include <random>
#include <vector>

#include "cavsim/controller.hpp"
#include "cavsim/dynamics.hpp"
#include "cavsim/geometry.hpp"

namespace cavsim {

/// Naive: positions advance at a constant speed but the reported speed and
/// input do not explain them. Strategic: a virtual vehicle driven by the
/// normal safety-filtered controller at a low cruise speed. DynamicsAware: a
/// virtual vehicle with consistent dynamics that ignores every safety rule.
enum class AttackerModel { Naive, Strategic, DynamicsAware };
enum class FakeLifetime { TraverseAndExit, Vanish };

const char* to_string(AttackerModel m);

struct FakeSpawn
{
  double time = 0.0;
  int lane = 1;
  Movement movement = Movement::Straight;
  double v0 = 15.0;
};

struct AttackerSpec
{
  bool enabled = false;
  AttackerModel model = AttackerModel::Strategic;
  std::vector<FakeSpawn> spawns;  // explicit schedule
  double fraction = 0.0;          // share of random arrivals turned into fakes
  int max_fake = 4;
  FakeLifetime lifetime = FakeLifetime::TraverseAndExit;
  double vanish_after = 10.0;     // seconds of reporting before going silent
  double naive_speed = 12.0;
  double naive_jitter = 1.0;
  double strategic_speed = 4.0;
  double attack_speed = 18.0;
};

struct UncooperativeSpec
{
  int count = 0;              // first `count` real arrivals on `lanes`
  std::vector<int> lanes;     // empty: any lane
  std::vector<int> ordinals;  // explicit arrival ordinals (1-based), added to the above
  double speed = 2.5;         // cruise speed, must not exceed v_low
};

/// Real CAVs whose co-observation check is forced to fail for a while, e.g. a
/// faulty transponder; used to exercise false positives.
struct DistrustSpec
{
  std::vector<int> ordinals;  // arrival ordinals of real CAVs
  double from = 0.0;
  double until = 1e9;
};

struct FakeAgent
{
  int id = -1;
  int trajectory = 0;
  AttackerModel model = AttackerModel::Strategic;
  VehicleState state;
  double u = 0.0;
  double spawn_time = 0.0;
  long steps = 0;
};

struct FakeReport
{
  double x = 0.0;
  double v = 0.0;
  double u = 0.0;
};

/// Tracks which scheduled spawns have happened.
struct AttackerState
{
  std::size_t next_spawn = 0;
  std::vector<FakeSpawn> deferred;
};

/// Spawns due at time `t` that fit under the identity cap. Spawns that do not
/// fit are deferred to a later call.
std::vector<FakeSpawn> spawn_fakes(AttackerState& state, const AttackerSpec& spec, double t,
                                   int active_fakes);

/// What the attacker tells the coordinator about `agent` this step.
FakeReport fake_report(const FakeAgent& agent, const AttackerSpec& spec);

/// False while the identity has gone silent.
bool fake_reporting(const FakeAgent& agent, const AttackerSpec& spec, double t);

/// Reference speed of a virtual fake vehicle.
double fake_cruise_speed(const FakeAgent& agent, const AttackerSpec& spec);

/// Advances the attacker's internal state by one step with input `u`.
void advance_fake(FakeAgent& agent, double u, double ts, const VehicleLimits& limits);

/// Reference override of an uncooperative CAV: never above v_low.
std::optional<double> uncooperative_override(bool uncooperative, const UncooperativeSpec& spec,
                                             double v_low);

}  // namespace cavsim

#endif  // CAVSIM_THREATS_HPP_
