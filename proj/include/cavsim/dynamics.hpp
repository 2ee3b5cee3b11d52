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

#ifndef CAVSIM_DYNAMICS_HPP_
#define CAVSIM_DYNAMICS_HPP_

namespace cavsim {

struct VehicleLimits
{
  double v_min = 0.0;
  double v_max = 30.0;     // 108 km/h
  double u_min = -5.886;
  double u_max = 4.905;
};

struct VehicleState
{
  double x = 0.0;  // arc length along the CAV's own trajectory
  double v = 0.0;
  double t = 0.0;
};

/// Polynomial fuel-rate model in mL/s:
///   f(v, u) = max(0, b0 + b1 v + b2 v^2 + b3 v^3 + u (c0 + c1 v + c2 v^2)).
struct FuelModel
{
  double b0 = 0.1569;
  double b1 = 2.450e-2;
  double b2 = -7.415e-4;
  double b3 = 5.975e-5;
  double c0 = 0.07224;
  double c1 = 9.681e-2;
  double c2 = 1.075e-3;

  double rate(double v, double u) const;
};

struct CostAccumulator
{
  double travel_time = 0.0;
  double energy = 0.0;  // integral of u^2 / 2
  double fuel = 0.0;    // mL
};

/// Exact double-integrator update over one step with u held constant. When
/// the velocity would leave [v_min, v_max] mid-step it is clamped from that
/// instant on and the position integrates both pieces. Throws
/// std::domain_error if u is outside the actuator bounds.
VehicleState step(const VehicleState& state, double u, double ts, const VehicleLimits& limits);

/// Adds one step of cost using the state at the start of the step.
CostAccumulator accumulate(const CostAccumulator& cost, const VehicleState& state, double u,
                           double ts, const FuelModel& fuel);

}  // namespace cavsim

#endif  // CAVSIM_DYNAMICS_HPP_
