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

#ifndef CAVSIM_PERCEPTION_HPP_
#define CAVSIM_PERCEPTION_HPP_

#include <map>
#include <random>
#include <vector>

#include "cavsim/dynamics.hpp"
#include "cavsim/geometry.hpp"

namespace cavsim {

struct SensorSpec
{
  double range = 50.0;
  double theta = 2.0 * 3.14159265358979323846;  // field of view, centred on heading
  double epsilon = 0.05;                         // l-inf bound on estimate noise

  void validate() const;
};

/// A physical vehicle in the world snapshot. Fake identities never have one.
struct Body
{
  int id = -1;
  Pose pose;
  VehicleState state;
};

struct Observation
{
  int observer = -1;
  int observed = -1;
  double x_hat = 0.0;
  double v_hat = 0.0;
  double t = 0.0;
};

/// True iff `target` lies within the sensor's radius and field of view.
bool in_footprint(const Pose& observer, Vec2 target, const SensorSpec& sensor);

/// Ids of bodies that `observer` actually sees, ascending.
std::vector<int> visible_set(const Body& observer, const std::vector<Body>& world,
                             const SensorSpec& sensor);

/// Noisy estimate of a visible body, noise uniform on the epsilon box.
/// Throws std::invalid_argument when `target` is not visible.
Observation observe(const Body& observer, const Body& target, const SensorSpec& sensor,
                    std::mt19937_64& rng);

struct ReportedPose
{
  int id = -1;
  Pose pose;
};

struct CoObservation
{
  std::vector<int> expected;  // CAVs whose reported pose puts i in their footprint
  std::vector<int> reported;  // CAVs that reported an estimate of i
};

/// For every reporting CAV i, who should see it and who said they did.
std::map<int, CoObservation> co_observation_report(
    const std::vector<ReportedPose>& reported_poses,
    const std::map<int, std::vector<int>>& seen_reports, const SensorSpec& sensor);

}  // namespace cavsim

#endif  // CAVSIM_PERCEPTION_HPP_
