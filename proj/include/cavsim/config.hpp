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

#ifndef CAVSIM_CONFIG_HPP_
#define CAVSIM_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavsim/controller.hpp"
#include "cavsim/coordinator.hpp"
#include "cavsim/dynamics.hpp"
#include "cavsim/geometry.hpp"
#include "cavsim/perception.hpp"
#include "cavsim/threats.hpp"
#include "cavsim/trust.hpp"

namespace cavsim {

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { Fifo, Trust, Lane, Both };
const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct ArrivalSpec
{
  double horizon = 60.0;                       // no random arrivals after this
  std::array<double, 8> rate{};                // per entry lane, CAVs per second
  double v0 = 15.0;
  double turn_probability = 0.3;               // share of arrivals that turn
  std::vector<FakeSpawn> explicit_arrivals;    // real CAVs at fixed times
};

struct ScenarioConfig
{
  std::uint64_t seed = 1;
  double max_time = 600.0;
  GeometryParams geometry;
  VehicleLimits limits;
  double ts = 0.05;
  double phi = 1.8;
  double delta = 3.78;
  FuelModel fuel;
  BarrierGains gains;          // phi, delta and ts are copied in by sync_derived()
  double v_free = 15.0;
  ReferencePolicy reference = ReferencePolicy::Default;
  double reference_horizon = 5.0;
  double beta = 1.0;           // time weight of the travel objective, reporting only
  SensorSpec sensor;
  TrustParams trust;
  Scheme scheme = Scheme::Fifo;
  bool trust_search = true;    // trust-based conflict search
  bool robust_rows = true;     // extra rows from noisy local estimates
  bool mitigation = false;
  CoordinatorParams coordinator;
  double report_timeout = 1.0;
  ArrivalSpec arrivals;
  AttackerSpec attacker;
  UncooperativeSpec uncooperative;
  DistrustSpec distrust;

  /// Copies phi, delta, ts and the trust delta into the gain and coordinator blocks.
  void sync_derived();

  /// Cross-field checks; throws ConfigError naming the field.
  void validate() const;
  /// v_max^2 / (2 |u_min|) + delta.
  double reschedule_margin() const;
};

ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& path);
std::string to_json(const ScenarioConfig& config, int indent = 2);

}  // namespace cavsim

#endif  // CAVSIM_CONFIG_HPP_
