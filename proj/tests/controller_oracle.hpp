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

#ifndef CAVSIM_TESTS_CONTROLLER_ORACLE_HPP_
#define CAVSIM_TESTS_CONTROLLER_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cavsim/controller.hpp"
#include "cavsim/dynamics.hpp"

namespace cavsim::testing {

using Kind = ConstraintTag::Kind;

// Reduces the program to one variable: for fixed u the best e is the
// projection of 0 onto the interval allowed by the soft rows.
struct GridOracle
{
  const StepProgram& p;

  bool hard_ok(double u, double tol) const
  {
    for (const auto& r : p.constraints)
      if (r.coeff_e == 0.0 && r.slack(u, 0.0) < -tol) return false;
    return true;
  }
  double best_e(double u, bool& ok) const
  {
    double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : p.constraints) {
      if (r.coeff_e == 0.0) continue;
      // coeff_u u + coeff_e e {<=,>=} rhs
      const double c = (r.rhs - r.coeff_u * u) / r.coeff_e;
      const bool upper = (r.sense == Sense::LessEqual) == (r.coeff_e > 0.0);
      if (upper) hi = std::min(hi, c); else lo = std::max(lo, c);
    }
    ok = lo <= hi + 1e-12;
    return std::clamp(0.0, lo, hi);
  }
  double value(double u, bool& ok) const
  {
    const double e = best_e(u, ok);
    ok = ok && hard_ok(u, 1e-12);
    return step_objective(p, u, e);
  }
  // Returns +inf when nothing on the grid is feasible.
  double minimise() const
  {
    double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : p.constraints) {
      if (r.coeff_e != 0.0) continue;
      if (auto ub = r.upper_bound()) hi = std::min(hi, *ub);
      if (auto lb = r.lower_bound()) lo = std::max(lo, *lb);
    }
    if (lo > hi) return std::numeric_limits<double>::infinity();
    const int n = 20000;
    double best = std::numeric_limits<double>::infinity(), arg = lo;
    for (int k = 0; k <= n; ++k) {
      const double u = lo + (hi - lo) * k / n;
      bool ok;
      const double v = value(u, ok);
      if (ok && v < best) { best = v; arg = u; }
    }
    // Golden-section polish around the best grid point.
    double a = std::max(lo, arg - (hi - lo) / n), b = std::min(hi, arg + (hi - lo) / n);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
      const double c = b - g * (b - a), d = a + g * (b - a);
      bool oc, od;
      if (value(c, oc) < value(d, od)) b = d; else a = c;
    }
    bool ok;
    const double polished = value(0.5 * (a + b), ok);
    return ok ? std::min(best, polished) : best;
  }
};

inline StepProgram random_program(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const VehicleLimits lim;
  StepProgram p;
  p.u_ref = 6.0 * U(rng);
  p.lambda = std::pow(10.0, 2.0 * U(rng));
  const double v = 15.0 + 15.0 * U(rng);
  p.v_ref = 15.0 + 15.0 * U(rng);
  p.constraints = limit_constraints({0.0, v, 0.0}, lim, BarrierGains{});
  p.constraints.push_back(clf_row(v, p.v_ref, 0.5 + U(rng) * 0.5 + 0.5));
  const int extra = static_cast<int>(4.0 * (U(rng) + 1.0) / 2.0);
  for (int k = 0; k < extra; ++k) {
    LinearConstraint r;
    r.coeff_u = 1.0;
    r.rhs = 5.0 * U(rng);
    r.sense = U(rng) > -0.6 ? Sense::LessEqual : Sense::GreaterEqual;
    r.tag = {Kind::RearEnd, k, -1};
    p.constraints.push_back(r);
  }
  return p;
}

// Closed loop of one follower against one adversarial lead, enforcing only
// the row under test plus the actuator limits.
template <typename RowFn, typename BarrierFn>
inline double closed_loop_min_barrier(std::mt19937_64& rng, RowFn make_row, BarrierFn barrier,
                               VehicleState own, VehicleState lead, double eps)
{
  const VehicleLimits lim;
  BarrierGains g;
  g.ts = 0.05;
  std::uniform_real_distribution<double> U(0.0, 1.0), W(-1.0, 1.0);
  double lowest = barrier(own, lead);
  for (int k = 0; k < 600; ++k) {
    const VehicleState est{lead.x + eps * W(rng), std::max(0.0, lead.v + eps * W(rng)), lead.t};
    StepProgram p;
    p.u_ref = lim.u_max;
    p.constraints = limit_constraints(own, lim, g);
    auto row = make_row(own, est, g, lim);
    if (eps > 0.0) row = robust_constraint(row, eps, own, est, g, lim);
    p.constraints.push_back(row);
    const auto s = solve_step(p);
    const double lead_u = lim.u_min + (lim.u_max - lim.u_min) * U(rng);
    own = step(own, std::clamp(s.u, lim.u_min, lim.u_max), g.ts, lim);
    lead = step(lead, lead_u, g.ts, lim);
    lowest = std::min(lowest, barrier(own, lead));
  }
  return lowest;
}

}  // namespace cavsim::testing

#endif  // CAVSIM_TESTS_CONTROLLER_ORACLE_HPP_
