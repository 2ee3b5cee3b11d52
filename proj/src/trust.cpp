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

#include "cavsim/trust.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cavsim {

double TrustParams::r_max() const { return *std::max_element(r.begin(), r.end()); }

double TrustParams::evidence_bound() const
{
  return static_cast<double>(kNumChecks) * r_max() / (1.0 - gamma);
}

const char* to_string(Verdict v)
{
  switch (v) {
    case Verdict::None: return "none";
    case Verdict::WindowOpen: return "window";
    case Verdict::Fake: return "fake";
  }
  return "?";
}

namespace {

void score(EvidenceVector& ev, Check check, bool ok, const TrustParams& params)
{
  const auto j = static_cast<std::size_t>(check);
  if (ok)
    ev.r[j] = params.r[j];
  else
    ev.p[j] = params.p[j];
}

std::vector<int> sorted_unique(std::vector<int> v)
{
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

EvidenceVector run_checks(const CheckInputs& in, const VehicleLimits& limits, double ts,
                          const TrustParams& params)
{
  EvidenceVector ev;

  // Co-observation: who should see it must equal who reported seeing it.
  {
    const auto expected = sorted_unique(in.expected_observers);
    const auto reported = sorted_unique(in.reporting_observers);
    if (!expected.empty() || !reported.empty()) {
      score(ev, Check::CoObservation, expected == reported, params);
      std::vector<int> involved = expected;
      involved.insert(involved.end(), reported.begin(), reported.end());
      ev.involved[0] = sorted_unique(std::move(involved));
    }
  }

  // Initial condition: the first report must sit at the lane origin.
  {
    bool ok = false;
    if (in.initial_report) {
      const auto& s = *in.initial_report;
      ok = std::abs(s.x) <= params.tol_x && s.v >= limits.v_min - params.tol_v &&
           s.v <= limits.v_max + params.tol_v;
    }
    score(ev, Check::InitialCondition, ok, params);
  }

  // Dynamic model: report must be the propagation of the previous one.
  {
    bool ok = in.report.has_value();
    if (ok && in.previous_report) {
      const auto& prev = *in.previous_report;
      if (in.previous_u < limits.u_min - 1e-9 || in.previous_u > limits.u_max + 1e-9) {
        ok = false;
      } else {
        const VehicleState expect = step(prev, in.previous_u, ts, limits);
        ok = std::abs(expect.x - in.report->x) <= params.tol_x &&
             std::abs(expect.v - in.report->v) <= params.tol_v;
      }
    }
    score(ev, Check::DynamicModel, ok, params);
  }

  // Control zone rules on the reported state.
  {
    bool ok = in.report.has_value();
    if (ok) {
      const auto& s = *in.report;
      ok = s.v >= limits.v_min - params.tol_v && s.v <= limits.v_max + params.tol_v &&
           in.reported_u >= limits.u_min - 1e-9 && in.reported_u <= limits.u_max + 1e-9;
    }
    std::vector<int> involved;
    for (const auto& rule : in.pairwise_rules) {
      involved.push_back(rule.other);
      if (rule.barrier < -params.tol_rule) ok = false;
    }
    score(ev, Check::CzRules, ok, params);
    ev.involved[3] = sorted_unique(std::move(involved));
  }
  return ev;
}

TrustState update_trust(const TrustState& state, const EvidenceVector& ev,
                        const TrustLookup& involved_tau, double gamma)
{
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("update_trust: gamma must be in (0, 1)");
  TrustState next = state;
  double r_sum = 0.0;
  double p_sum = 0.0;
  for (std::size_t j = 0; j < kNumChecks; ++j) {
    double factor = 1.0;
    for (int k : ev.involved[j]) factor *= involved_tau(k);
    r_sum += factor * ev.r[j];
    p_sum += factor * ev.p[j];
  }
  next.R = gamma * state.R + r_sum;
  next.P = gamma * state.P + p_sum;
  next.tau = next.R / (next.R + next.P + next.h);
  next.tau_history.push_back(next.tau);
  while (next.tau_history.size() > std::max<std::size_t>(2, next.history_capacity))
    next.tau_history.pop_front();
  return next;
}

Verdict detect_fake(const TrustState& state, double delta, int eta)
{
  const auto& hist = state.tau_history;
  if (hist.empty()) return Verdict::None;
  const double threshold = 1.0 - delta;
  // Length of the trailing run of steps that keep the window open.
  int run = 0;
  for (std::size_t n = hist.size(); n-- > 0;) {
    const double prev = n == 0 ? hist[n] : hist[n - 1];
    if (hist[n] <= threshold && hist[n] <= prev)
      ++run;
    else
      break;
  }
  if (run >= eta) return Verdict::Fake;
  return run > 0 ? Verdict::WindowOpen : Verdict::None;
}

}  // namespace cavsim
