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

#ifndef CAVSIM_CONTROLLER_HPP_
#define CAVSIM_CONTROLLER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "cavsim/dynamics.hpp"

namespace cavsim {

struct ConstraintTag
{
  enum class Kind { RearEnd, Merge, Yield, VMax, VMin, UMax, UMin, Clf };
  Kind kind = Kind::UMax;
  int other = -1;  // counterpart CAV id for pairwise rows
  int mp = -1;     // merge point id for Merge/Yield rows

  bool is_pairwise() const
  {
    return kind == Kind::RearEnd || kind == Kind::Merge || kind == Kind::Yield;
  }
  std::string str() const;
  bool operator==(const ConstraintTag&) const = default;
};

enum class Sense { GreaterEqual, LessEqual };

/// coeff_u * u + coeff_e * e {>=, <=} rhs
struct LinearConstraint
{
  double coeff_u = 0.0;
  double coeff_e = 0.0;
  double rhs = 0.0;
  Sense sense = Sense::LessEqual;
  ConstraintTag tag;
  // Barrier value b(x) the row was built from; NaN for rows that are not CBFs.
  double barrier = 0.0;

  double lhs(double u, double e) const { return coeff_u * u + coeff_e * e; }
  /// Signed slack; >= 0 when satisfied.
  double slack(double u, double e) const
  {
    return sense == Sense::LessEqual ? rhs - lhs(u, e) : lhs(u, e) - rhs;
  }
  bool is_hard() const { return tag.kind != ConstraintTag::Kind::Clf; }
  /// Upper bound on u if this is a pure `u <= c` row (coeff_u > 0, no slack).
  std::optional<double> upper_bound() const;
  std::optional<double> lower_bound() const;
};

/// Gains and constants shared by all barrier rows. `ts == 0` yields the
/// continuous-time condition  L_f b + L_g b u + k b >= 0;  `ts > 0` yields the
/// zero-order-hold version  b(t + ts) >= (1 - k ts) b(t),  which is still
/// linear in u and reduces to the continuous one as ts -> 0.
struct BarrierGains
{
  double k_rear = 1.0;
  double k_merge = 1.0;
  double k_yield = 1.0;
  double k_speed = 20.0;
  double c3 = 1.0;
  double lambda = 10.0;
  double phi = 1.8;
  double delta = 3.78;
  double ts = 0.0;
};

struct StepProgram
{
  double u_ref = 0.0;
  double v_ref = 0.0;
  double lambda = 10.0;
  double u_min = -5.886;
  double u_max = 4.905;
  std::vector<LinearConstraint> constraints;
};

struct StepSolution
{
  double u = 0.0;
  double e = 0.0;
  std::vector<ConstraintTag> active_set;
  bool feasible = true;
  std::string diagnostic;
};

enum class ReferencePolicy { Default, TimeEnergy };

struct ReferenceInputs
{
  ReferencePolicy policy = ReferencePolicy::Default;
  double v = 0.0;
  double v_free = 15.0;
  std::optional<double> v_low_override;  // uncooperative CAV
  bool overtaking = false;
  double horizon = 5.0;  // TimeEnergy: time to reach v_ref
};

struct Reference
{
  double u_ref = 0.0;
  double v_ref = 0.0;
};

Reference reference_control(const ReferenceInputs& in, const VehicleLimits& limits);

/// Safe-following barrier b = gap - phi v_i - delta.
double following_barrier(double gap, double v_i, double phi, double delta);

/// Rear-end row against the physically preceding CAV `lead` on the same lane.
/// `extra_gain` is added to the class-K gain (mitigation relaxation).
LinearConstraint rear_end_constraint(const VehicleState& own, const VehicleState& lead, int lead_id,
                                     const BarrierGains& gains, const VehicleLimits& limits,
                                     double extra_gain = 0.0);

/// Merge row in remaining-distance coordinates: both CAVs are aligned by
/// their distance to the merge point, gap = dist_own - dist_lead.
LinearConstraint merging_constraint(const VehicleState& own, const VehicleState& lead,
                                    double dist_own_to_mp, double dist_lead_to_mp, int lead_id,
                                    int mp_id, const BarrierGains& gains,
                                    const VehicleLimits& limits, double extra_gain = 0.0);

/// Stop-before-merge-point row, b = d - delta - v^2 / (2 |u_min|). Used
/// instead of the merge row while the merge barrier is negative, e.g. right
/// after a reschedule made the CAV yield to someone physically behind it, or
/// while the merge row needs more braking than u_min.
LinearConstraint yield_constraint(const VehicleState& own, double dist_to_mp, int lead_id,
                                  int mp_id, const BarrierGains& gains,
                                  const VehicleLimits& limits);

/// Worst case of a pairwise row when the counterpart state is an estimate
/// with |noise|_inf <= epsilon. Returns the row with the bound tightened by
/// epsilon times the l1 norm of its gradient with respect to the estimated
/// (position, speed). Throws std::invalid_argument if epsilon < 0.
LinearConstraint robust_constraint(const LinearConstraint& nominal, double epsilon,
                                   const VehicleState& own, const VehicleState& estimate,
                                   const BarrierGains& gains, const VehicleLimits& limits,
                                   double extra_gain = 0.0);

/// VMax, VMin, UMax, UMin rows.
std::vector<LinearConstraint> limit_constraints(const VehicleState& state,
                                                const VehicleLimits& limits,
                                                const BarrierGains& gains);

/// CLF row  2 (v - v_ref) u + c3 (v - v_ref)^2 <= e.
LinearConstraint clf_row(double v, double v_ref, double c3);

/// Exact minimiser of 1/2 (u - u_ref)^2 + lambda e^2 over all rows, by
/// enumerating active sets of size <= 2. On infeasibility the fallback
/// control is returned with feasible = false.
StepSolution solve_step(const StepProgram& program);

double step_objective(const StepProgram& program, double u, double e);

}  // namespace cavsim

#endif  // CAVSIM_CONTROLLER_HPP_
