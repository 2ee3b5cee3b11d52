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

#include "cavsim/dynamics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cavsim {

double FuelModel::rate(double v, double u) const
{
  const double cruise = b0 + v * (b1 + v * (b2 + v * b3));
  const double accel = u * (c0 + v * (c1 + v * c2));
  return std::max(0.0, cruise + accel);
}

VehicleState step(const VehicleState& state, double u, double ts, const VehicleLimits& limits)
{
  if (!(ts > 0.0)) throw std::domain_error("step: ts must be > 0");
  constexpr double kTol = 1e-9;
  if (u < limits.u_min - kTol || u > limits.u_max + kTol)
    throw std::domain_error("step: control " + std::to_string(u) + " outside [" +
                            std::to_string(limits.u_min) + ", " + std::to_string(limits.u_max) +
                            "]");

  VehicleState next = state;
  next.t = state.t + ts;
  const double v0 = std::clamp(state.v, limits.v_min, limits.v_max);
  const double v_free = v0 + u * ts;
  if (v_free > limits.v_max && u > 0.0) {
    const double t_sat = (limits.v_max - v0) / u;
    next.x = state.x + v0 * t_sat + 0.5 * u * t_sat * t_sat + limits.v_max * (ts - t_sat);
    next.v = limits.v_max;
  } else if (v_free < limits.v_min && u < 0.0) {
    const double t_sat = (limits.v_min - v0) / u;
    next.x = state.x + v0 * t_sat + 0.5 * u * t_sat * t_sat + limits.v_min * (ts - t_sat);
    next.v = limits.v_min;
  } else {
    next.x = state.x + v0 * ts + 0.5 * u * ts * ts;
    next.v = v_free;
  }
  return next;
}

CostAccumulator accumulate(const CostAccumulator& cost, const VehicleState& state, double u,
                           double ts, const FuelModel& fuel)
{
  CostAccumulator out = cost;
  out.travel_time += ts;
  out.energy += 0.5 * u * u * ts;
  out.fuel += fuel.rate(state.v, u) * ts;
  return out;
}

}  // namespace cavsim
