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

#include "cavsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cavsim {

namespace {

using Kind = ConstraintTag::Kind;

LinearConstraint upper_row(double bound, ConstraintTag tag, double barrier)
{
  LinearConstraint row;
  row.coeff_u = 1.0;
  row.rhs = bound;
  row.sense = Sense::LessEqual;
  row.tag = tag;
  row.barrier = barrier;
  return row;
}

LinearConstraint lower_row(double bound, ConstraintTag tag, double barrier)
{
  LinearConstraint row = upper_row(bound, tag, barrier);
  row.sense = Sense::GreaterEqual;
  return row;
}

// Minimum distance the lead can cover in one step when braking as hard as it
// can; it cannot reverse.
double lead_min_displacement(double v_lead, double ts, double brake)
{
  if (v_lead >= brake * ts) return v_lead * ts - 0.5 * brake * ts * ts;
  return std::max(0.0, v_lead) * std::max(0.0, v_lead) / (2.0 * brake);
}

// Upper bound on u from a following barrier b = gap - phi v - delta whose gap
// closes at (v_lead - v_own).
double following_bound(double b, double v_own, double v_lead, double k, const BarrierGains& g,
                       const VehicleLimits& limits)
{
  if (g.ts <= 0.0) return ((v_lead - v_own) + k * b) / g.phi;
  const double ts = g.ts;
  const double disp = lead_min_displacement(v_lead, ts, std::abs(limits.u_min));
  return (disp - v_own * ts + k * ts * b) / (g.phi * ts + 0.5 * ts * ts);
}

// |d bound / d x_lead| + |d bound / d v_lead|, taking the steepest slope of the
// lead displacement so the tightening is never optimistic.
double following_bound_gradient_l1(double k, const BarrierGains& g)
{
  if (g.ts <= 0.0) return (k + 1.0) / g.phi;
  const double ts = g.ts;
  return (k * ts + ts) / (g.phi * ts + 0.5 * ts * ts);
}

double gain_for(Kind kind, const BarrierGains& g)
{
  switch (kind) {
    case Kind::RearEnd: return g.k_rear;
    case Kind::Merge: return g.k_merge;
    case Kind::Yield: return g.k_yield;
    default: return g.k_speed;
  }
}

}  // namespace

std::string ConstraintTag::str() const
{
  switch (kind) {
    case Kind::RearEnd: return "rear(" + std::to_string(other) + ")";
    case Kind::Merge: return "merge(" + std::to_string(other) + "@M" + std::to_string(mp) + ")";
    case Kind::Yield: return "yield(" + std::to_string(other) + "@M" + std::to_string(mp) + ")";
    case Kind::VMax: return "vmax";
    case Kind::VMin: return "vmin";
    case Kind::UMax: return "umax";
    case Kind::UMin: return "umin";
    case Kind::Clf: return "clf";
  }
  return "?";
}

std::optional<double> LinearConstraint::upper_bound() const
{
  if (coeff_e != 0.0 || coeff_u == 0.0) return std::nullopt;
  const bool upper = (sense == Sense::LessEqual) == (coeff_u > 0.0);
  if (!upper) return std::nullopt;
  return rhs / coeff_u;
}

std::optional<double> LinearConstraint::lower_bound() const
{
  if (coeff_e != 0.0 || coeff_u == 0.0) return std::nullopt;
  const bool lower = (sense == Sense::GreaterEqual) == (coeff_u > 0.0);
  if (!lower) return std::nullopt;
  return rhs / coeff_u;
}

Reference reference_control(const ReferenceInputs& in, const VehicleLimits& limits)
{
  Reference ref;
  ref.v_ref = in.v_free;
  if (in.v_low_override) ref.v_ref = std::min(ref.v_ref, *in.v_low_override);
  ref.v_ref = std::clamp(ref.v_ref, limits.v_min, limits.v_max);
  if (in.overtaking) {
    ref.u_ref = limits.u_max;
    ref.v_ref = limits.v_max;
    return ref;
  }
  if (in.policy == ReferencePolicy::TimeEnergy && in.horizon > 0.0)
    ref.u_ref = std::clamp((ref.v_ref - in.v) / in.horizon, limits.u_min, limits.u_max);
  return ref;
}

double following_barrier(double gap, double v_i, double phi, double delta)
{
  return gap - phi * v_i - delta;
}

LinearConstraint rear_end_constraint(const VehicleState& own, const VehicleState& lead,
                                     int lead_id, const BarrierGains& gains,
                                     const VehicleLimits& limits, double extra_gain)
{
  const double b = following_barrier(lead.x - own.x, own.v, gains.phi, gains.delta);
  const double bound =
      following_bound(b, own.v, lead.v, gains.k_rear + extra_gain, gains, limits);
  return upper_row(bound, {Kind::RearEnd, lead_id, -1}, b);
}

LinearConstraint merging_constraint(const VehicleState& own, const VehicleState& lead,
                                    double dist_own_to_mp, double dist_lead_to_mp, int lead_id,
                                    int mp_id, const BarrierGains& gains,
                                    const VehicleLimits& limits, double extra_gain)
{
  const double b =
      following_barrier(dist_own_to_mp - dist_lead_to_mp, own.v, gains.phi, gains.delta);
  const double bound =
      following_bound(b, own.v, lead.v, gains.k_merge + extra_gain, gains, limits);
  return upper_row(bound, {Kind::Merge, lead_id, mp_id}, b);
}

LinearConstraint yield_constraint(const VehicleState& own, double dist_to_mp, int lead_id,
                                  int mp_id, const BarrierGains& gains,
                                  const VehicleLimits& limits)
{
  const double brake = std::abs(limits.u_min);
  const double v = std::max(0.0, own.v);
  const double b = dist_to_mp - gains.delta - v * v / (2.0 * brake);
  const double k = gains.k_yield;
  const ConstraintTag tag{Kind::Yield, lead_id, mp_id};
  double bound;
  if (gains.ts <= 0.0) {
    if (v > 0.0)
      bound = (k * b - v) * brake / v;
    else
      bound = b >= 0.0 ? limits.u_max : limits.u_min;
  } else {
    // b(t+ts) >= (1 - k ts) b(t) is concave-quadratic in u; keep the upper root.
    const double ts = gains.ts;
    const double qa = ts * ts / (2.0 * brake);
    const double qb = 0.5 * ts * ts + v * ts / brake;
    const double qc = k * ts * b - v * ts;
    const double disc = qb * qb + 4.0 * qa * qc;
    bound = disc < 0.0 ? limits.u_min : (-qb + std::sqrt(disc)) / (2.0 * qa);
    // A CAV slower than one step of hard braking simply stops inside the step.
    if (v < brake * ts) bound = std::max(bound, -v / ts);
  }
  return upper_row(bound, tag, b);
}

LinearConstraint robust_constraint(const LinearConstraint& nominal, double epsilon,
                                   const VehicleState& /*own*/, const VehicleState& /*estimate*/,
                                   const BarrierGains& gains, const VehicleLimits& /*limits*/,
                                   double extra_gain)
{
  if (epsilon < 0.0) throw std::invalid_argument("robust_constraint: epsilon must be >= 0");
  LinearConstraint row = nominal;
  if (epsilon == 0.0) return row;
  const Kind kind = nominal.tag.kind;
  if (kind != Kind::RearEnd && kind != Kind::Merge) return row;
  const double k = gain_for(kind, gains) + extra_gain;
  row.rhs -= epsilon * following_bound_gradient_l1(k, gains) * nominal.coeff_u;
  row.barrier -= epsilon;
  return row;
}

std::vector<LinearConstraint> limit_constraints(const VehicleState& state,
                                                const VehicleLimits& limits,
                                                const BarrierGains& gains)
{
  const double k = gains.k_speed;
  const double b_max = limits.v_max - state.v;
  const double b_min = state.v - limits.v_min;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {
      upper_row(k * b_max, {Kind::VMax, -1, -1}, b_max),
      lower_row(-k * b_min, {Kind::VMin, -1, -1}, b_min),
      upper_row(limits.u_max, {Kind::UMax, -1, -1}, nan),
      lower_row(limits.u_min, {Kind::UMin, -1, -1}, nan),
  };
}

LinearConstraint clf_row(double v, double v_ref, double c3)
{
  const double err = v - v_ref;
  LinearConstraint row;
  row.coeff_u = 2.0 * err;
  row.coeff_e = -1.0;
  row.rhs = -c3 * err * err;
  row.sense = Sense::LessEqual;
  row.tag = {Kind::Clf, -1, -1};
  row.barrier = std::numeric_limits<double>::quiet_NaN();
  return row;
}

double step_objective(const StepProgram& program, double u, double e)
{
  const double du = u - program.u_ref;
  return 0.5 * du * du + program.lambda * e * e;
}

StepSolution solve_step(const StepProgram& program)
{
  if (!(program.lambda > 0.0)) throw std::invalid_argument("solve_step: lambda must be > 0");
  const auto& rows = program.constraints;
  const double two_lambda = 2.0 * program.lambda;

  auto feasible = [&](double u, double e) {
    for (const auto& r : rows) {
      const double scale = 1.0 + std::abs(r.rhs) + std::abs(r.coeff_u * u) + std::abs(r.coeff_e * e);
      if (r.slack(u, e) < -1e-12 * scale) return false;
    }
    return true;
  };

  bool found = false;
  double best_u = 0.0, best_e = 0.0, best_obj = std::numeric_limits<double>::infinity();
  auto consider = [&](double u, double e) {
    if (!std::isfinite(u) || !std::isfinite(e) || !feasible(u, e)) return;
    const double obj = step_objective(program, u, e);
    const double tie = 1e-12 * (1.0 + std::abs(obj));
    if (!found || obj < best_obj - tie ||
        (obj <= best_obj + tie &&
         std::abs(u - program.u_ref) < std::abs(best_u - program.u_ref))) {
      found = true;
      best_u = u;
      best_e = e;
      best_obj = obj;
    }
  };

  // Empty active set.
  consider(program.u_ref, 0.0);
  // One active row: minimise the objective on the line a u + b e = c.
  for (const auto& r : rows) {
    const double den = r.coeff_u * r.coeff_u + r.coeff_e * r.coeff_e / two_lambda;
    if (den <= 0.0) continue;
    const double mu = (r.rhs - r.coeff_u * program.u_ref) / den;
    consider(program.u_ref + mu * r.coeff_u, mu * r.coeff_e / two_lambda);
  }
  // Two active rows: the vertex where both lines meet.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const auto& p = rows[i];
      const auto& q = rows[j];
      const double det = p.coeff_u * q.coeff_e - p.coeff_e * q.coeff_u;
      if (std::abs(det) < 1e-14) continue;
      const double u = (p.rhs * q.coeff_e - p.coeff_e * q.rhs) / det;
      const double e = (p.coeff_u * q.rhs - p.rhs * q.coeff_u) / det;
      consider(u, e);
    }
  }

  StepSolution sol;
  if (found) {
    sol.u = best_u;
    sol.e = best_e;
    for (const auto& r : rows) {
      const double scale = 1.0 + std::abs(r.rhs);
      if (std::abs(r.slack(best_u, best_e)) <= 1e-9 * scale) sol.active_set.push_back(r.tag);
    }
    return sol;
  }

  // Infeasible: brake according to the tightest safety row, never beyond the
  // actuator limits.
  sol.feasible = false;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  const ConstraintTag* lo_tag = nullptr;
  const ConstraintTag* hi_tag = nullptr;
  double safety = std::numeric_limits<double>::infinity();
  const ConstraintTag* safety_tag = nullptr;
  for (const auto& r : rows) {
    if (!r.is_hard()) continue;
    if (auto ub = r.upper_bound()) {
      if (*ub < hi) { hi = *ub; hi_tag = &r.tag; }
      if (r.tag.is_pairwise() && *ub < safety) { safety = *ub; safety_tag = &r.tag; }
    }
    if (auto lb = r.lower_bound()) {
      if (*lb > lo) { lo = *lb; lo_tag = &r.tag; }
    }
  }
  sol.u = std::clamp(std::isfinite(safety) ? safety : program.u_min, program.u_min, program.u_max);
  sol.e = 0.0;
  for (const auto& r : rows)
    if (!r.is_hard()) sol.e = std::max(sol.e, -r.slack(sol.u, 0.0) / std::max(1e-300, std::abs(r.coeff_e)));
  sol.diagnostic = "infeasible: lower bound " + std::to_string(lo) + " from " +
                   (lo_tag ? lo_tag->str() : std::string("none")) + " exceeds upper bound " +
                   std::to_string(hi) + " from " + (hi_tag ? hi_tag->str() : std::string("none"));
  if (safety_tag) sol.active_set.push_back(*safety_tag);
  if (lo_tag) sol.active_set.push_back(*lo_tag);
  return sol;
}

}  // namespace cavsim
