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

#ifndef CAVSIM_TRUST_HPP_
#define CAVSIM_TRUST_HPP_

#include <array>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "cavsim/dynamics.hpp"

namespace cavsim {

/// Behavioural checks, in the order evidence magnitudes are configured.
enum class Check : std::size_t { CoObservation = 0, InitialCondition = 1, DynamicModel = 2, CzRules = 3 };
inline constexpr std::size_t kNumChecks = 4;

struct TrustParams
{
  double gamma = 0.9;
  double h = 1.0;
  double delta = 0.1;
  int eta = 40;
  std::array<double, kNumChecks> r = {0.6, 0.6, 0.6, 0.6};
  std::array<double, kNumChecks> p = {1000.0, 100.0, 50.0, 1.0};
  double tol_x = 1e-3;
  double tol_v = 1e-3;
  double tol_rule = 1e-3;

  double r_max() const;
  /// |B| r_max / (1 - gamma): the supremum of R under bounded positive evidence.
  double evidence_bound() const;
};

struct EvidenceVector
{
  std::array<double, kNumChecks> r{};
  std::array<double, kNumChecks> p{};
  // Other CAVs a check depended on. Empty means the check is scored as if it
  // involved nobody this step.
  std::array<std::vector<int>, kNumChecks> involved{};
};

struct TrustState
{
  double R = 0.0;
  double P = 0.0;
  double tau = 0.0;
  double h = 1.0;
  std::deque<double> tau_history;
  std::size_t history_capacity = 64;
};

enum class Verdict { None, WindowOpen, Fake };
const char* to_string(Verdict v);

/// Barrier value of one pairwise rule evaluated on reported states.
struct RuleEvaluation
{
  int other = -1;
  double barrier = 0.0;
};

/// Everything the coordinator knows about one CAV for one step.
struct CheckInputs
{
  std::vector<int> expected_observers;  // should see this CAV given reports
  std::vector<int> reporting_observers; // reported an estimate of it
  std::optional<VehicleState> initial_report;
  std::optional<VehicleState> previous_report;
  double previous_u = 0.0;
  std::optional<VehicleState> report;   // empty when the CAV sent nothing
  double reported_u = 0.0;
  std::vector<RuleEvaluation> pairwise_rules;
};

EvidenceVector run_checks(const CheckInputs& in, const VehicleLimits& limits, double ts,
                          const TrustParams& params);

using TrustLookup = std::function<double(int)>;

/// Discounted evidence update followed by tau = R / (R + P + h). Evidence of a
/// check that involved other CAVs is scaled by the product of their trust.
TrustState update_trust(const TrustState& state, const EvidenceVector& ev,
                        const TrustLookup& involved_tau, double gamma);

/// Observation-window rule over the trust history: a window opens on a
/// non-increasing value at or below 1 - delta and the verdict is Fake once it
/// has stayed open for eta consecutive steps.
Verdict detect_fake(const TrustState& state, double delta, int eta);

}  // namespace cavsim

#endif  // CAVSIM_TRUST_HPP_
