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

#include "cavsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cavsim {

void SensorSpec::validate() const
{
  if (!(range > 0.0)) throw std::invalid_argument("sensor.range must be > 0");
  if (!(theta >= 0.0 && theta <= 2.0 * M_PI + 1e-12))
    throw std::invalid_argument("sensor.theta must be in [0, 2 pi]");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("sensor.epsilon must be >= 0");
}

bool in_footprint(const Pose& observer, Vec2 target, const SensorSpec& sensor)
{
  const Vec2 d = target - observer.position;
  const double dist = norm(d);
  if (dist > sensor.range) return false;
  if (sensor.theta >= 2.0 * M_PI || dist == 0.0) return true;
  const double bearing = std::remainder(std::atan2(d.y, d.x) - observer.heading, 2.0 * M_PI);
  return std::abs(bearing) <= 0.5 * sensor.theta;
}

std::vector<int> visible_set(const Body& observer, const std::vector<Body>& world,
                             const SensorSpec& sensor)
{
  std::vector<int> ids;
  for (const auto& b : world)
    if (b.id != observer.id && in_footprint(observer.pose, b.pose.position, sensor))
      ids.push_back(b.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Observation observe(const Body& observer, const Body& target, const SensorSpec& sensor,
                    std::mt19937_64& rng)
{
  if (target.id == observer.id || !in_footprint(observer.pose, target.pose.position, sensor))
    throw std::invalid_argument("observe: CAV " + std::to_string(target.id) +
                                " is not visible to CAV " + std::to_string(observer.id));
  std::uniform_real_distribution<double> noise(-sensor.epsilon, sensor.epsilon);
  Observation obs;
  obs.observer = observer.id;
  obs.observed = target.id;
  const double wx = sensor.epsilon > 0.0 ? noise(rng) : 0.0;
  const double wv = sensor.epsilon > 0.0 ? noise(rng) : 0.0;
  obs.x_hat = target.state.x + wx;
  obs.v_hat = target.state.v + wv;
  obs.t = target.state.t;
  return obs;
}

std::map<int, CoObservation> co_observation_report(
    const std::vector<ReportedPose>& reported_poses,
    const std::map<int, std::vector<int>>& seen_reports, const SensorSpec& sensor)
{
  std::map<int, CoObservation> out;
  for (const auto& target : reported_poses) {
    auto& entry = out[target.id];
    for (const auto& obs : reported_poses) {
      if (obs.id == target.id) continue;
      if (in_footprint(obs.pose, target.pose.position, sensor)) entry.expected.push_back(obs.id);
    }
  }
  for (const auto& [observer, seen] : seen_reports) {
    for (int id : seen) {
      auto it = out.find(id);
      if (it != out.end() && id != observer) it->second.reported.push_back(observer);
    }
  }
  for (auto& [id, co] : out) {
    std::sort(co.expected.begin(), co.expected.end());
    std::sort(co.reported.begin(), co.reported.end());
    co.reported.erase(std::unique(co.reported.begin(), co.reported.end()), co.reported.end());
  }
  return out;
}

}  // namespace cavsim
