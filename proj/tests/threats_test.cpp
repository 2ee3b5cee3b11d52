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

#include "cavsim/threats.hpp"
#include "cavsim/trust.hpp"

namespace cavsim {
namespace {

constexpr double kTs = 0.05;

TEST(Threats, SpawnCapDefersExtraFakes)
{
  AttackerSpec spec;
  spec.enabled = true;
  spec.max_fake = 2;
  spec.spawns = {{0.0, 1}, {0.0, 3}, {0.0, 5}, {4.0, 7}};
  AttackerState st;
  const auto first = spawn_fakes(st, spec, 0.0, 0);
  ASSERT_EQ(first.size(), 2u);
  EXPECT_EQ(first[0].lane, 1);
  EXPECT_EQ(first[1].lane, 3);
  ASSERT_EQ(st.deferred.size(), 1u);
  EXPECT_TRUE(spawn_fakes(st, spec, 1.0, 2).empty());
  const auto later = spawn_fakes(st, spec, 2.0, 1);
  ASSERT_EQ(later.size(), 1u);
  EXPECT_EQ(later[0].lane, 5);
  EXPECT_EQ(spawn_fakes(st, spec, 4.0, 0).size(), 1u);
}

TEST(Threats, DisabledAttackerSpawnsNothing)
{
  AttackerSpec spec;
  spec.spawns = {{0.0, 1}};
  AttackerState st;
  EXPECT_TRUE(spawn_fakes(st, spec, 10.0, 0).empty());
}

// Feeds the fake's own reports through the per-CAV checks, step by step.
std::array<int, kNumChecks> violations(FakeAgent f, const AttackerSpec& spec, int steps,
                                       double u_cmd)
{
  const VehicleLimits lim;
  const TrustParams params;
  std::array<int, kNumChecks> count{};
  std::optional<VehicleState> initial, prev;
  for (int k = 0; k < steps; ++k) {
    const auto rep = fake_report(f, spec);
    const VehicleState s{rep.x, rep.v, k * kTs};
    if (!initial) initial = s;
    CheckInputs in;
    in.initial_report = initial;
    in.previous_report = prev;
    in.previous_u = rep.u;
    in.report = s;
    in.reported_u = rep.u;
    const auto ev = run_checks(in, lim, kTs, params);
    for (std::size_t j = 0; j < kNumChecks; ++j)
      if (ev.p[j] > 0.0) ++count[j];
    prev = s;
    advance_fake(f, u_cmd, kTs, lim);
  }
  return count;
}

TEST(Threats, NaiveReportsBreakTheDynamicModel)
{
  AttackerSpec spec;
  FakeAgent f;
  f.model = AttackerModel::Naive;
  f.state = {0.0, spec.naive_speed, 0.0};
  const auto v = violations(f, spec, 40, 0.0);
  EXPECT_EQ(v[static_cast<std::size_t>(Check::InitialCondition)], 0);
  EXPECT_GE(v[static_cast<std::size_t>(Check::DynamicModel)], 39);
}

TEST(Threats, StrategicReportsPassEveryLocalCheck)
{
  AttackerSpec spec;
  FakeAgent f;
  f.model = AttackerModel::Strategic;
  f.state = {0.0, 15.0, 0.0};
  // Slowing to the cruise speed exercises non-zero inputs.
  const auto v = violations(f, spec, 200, -2.0);
  for (std::size_t j = 1; j < kNumChecks; ++j) EXPECT_EQ(v[j], 0) << "check " << j;
}

TEST(Threats, VanishingFakeStopsReporting)
{
  AttackerSpec spec;
  spec.lifetime = FakeLifetime::Vanish;
  spec.vanish_after = 3.0;
  FakeAgent f;
  f.spawn_time = 10.0;
  EXPECT_TRUE(fake_reporting(f, spec, 12.9));
  EXPECT_FALSE(fake_reporting(f, spec, 13.0));
  spec.lifetime = FakeLifetime::TraverseAndExit;
  EXPECT_TRUE(fake_reporting(f, spec, 100.0));
}

TEST(Threats, CruiseSpeedsAndOverrides)
{
  AttackerSpec spec;
  FakeAgent f;
  f.model = AttackerModel::DynamicsAware;
  EXPECT_EQ(fake_cruise_speed(f, spec), spec.attack_speed);
  f.model = AttackerModel::Strategic;
  EXPECT_EQ(fake_cruise_speed(f, spec), spec.strategic_speed);
  UncooperativeSpec u;
  u.speed = 5.0;
  EXPECT_FALSE(uncooperative_override(false, u, 3.0));
  EXPECT_EQ(uncooperative_override(true, u, 3.0), 3.0);
  u.speed = 2.0;
  EXPECT_EQ(uncooperative_override(true, u, 3.0), 2.0);
}

TEST(Threats, AdvanceClampsInputs)
{
  const VehicleLimits lim;
  FakeAgent f;
  f.model = AttackerModel::DynamicsAware;
  f.state = {0.0, 10.0, 0.0};
  advance_fake(f, 100.0, kTs, lim);
  EXPECT_EQ(f.u, lim.u_max);
  EXPECT_EQ(f.steps, 1);
  FakeAgent n;
  n.model = AttackerModel::Naive;
  n.state = {5.0, 12.0, 0.0};
  advance_fake(n, 3.0, kTs, lim);
  EXPECT_DOUBLE_EQ(n.state.x, 5.0 + 12.0 * kTs);
  EXPECT_EQ(n.state.v, 12.0);
}

}  // namespace
}  // namespace cavsim
