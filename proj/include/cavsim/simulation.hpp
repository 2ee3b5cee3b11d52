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

#ifndef CAVSIM_SIMULATION_HPP_
#define CAVSIM_SIMULATION_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cavsim/config.hpp"
#include "cavsim/coordinator.hpp"
#include "cavsim/perception.hpp"
#include "cavsim/threats.hpp"

namespace cavsim {

/// Cost record of one identity that left the control zone.
struct CompletedCav
{
  int id = -1;
  bool real = true;
  double travel_time = 0.0;
  double energy = 0.0;
  double fuel = 0.0;
};

struct SummaryMetrics
{
  int real_count = 0;
  int fake_count = 0;
  int uncooperative_count = 0;
  int completed_real = 0;
  int unfinished_real = 0;
  std::optional<double> avg_travel_time;
  std::optional<double> avg_energy;
  std::optional<double> avg_fuel;
  int collisions = 0;       // real pairs whose rear-end or merge value went below zero
  double min_rear_b = 0.0;  // over real pairs, true states; +inf if none
  double min_merge_b = 0.0;
  long infeasible_steps = 0;            // real CAVs
  long infeasible_after_reschedule = 0; // real CAVs, after the first reschedule
  int reschedules_trust = 0;
  int reschedules_lane = 0;
  int reschedules_mitigation = 0;
  int overtake_swaps = 0;
  int detected_fakes = 0;
  int false_positives = 0;
  int false_negatives = 0;
  int overtakes_of_visible_real = 0;    // must stay zero
  int trust_bound_violations = 0;       // must stay zero
  double max_R = 0.0;
  double sim_time = 0.0;
  long steps = 0;
};

/// Averages over real CAVs that completed; counts pass through unchanged.
SummaryMetrics summarize(const std::vector<CompletedCav>& completed, SummaryMetrics counters);

std::string summary_to_json(const SummaryMetrics& m, int indent = 2);

/// Header of trace.csv.
extern const char* const kTraceHeader;

struct RunOutputs
{
  std::ostream* trace = nullptr;   // trace.csv rows, header included
  std::ostream* events = nullptr;  // events.jsonl
};

class Simulation
{
public:
  explicit Simulation(ScenarioConfig config);
  ~Simulation();

  /// Runs to completion and returns the summary. Deterministic in the config
  /// and seed.
  SummaryMetrics run(const RunOutputs& out = {});

  const ScenarioConfig& config() const { return cfg_; }
  const IntersectionGeometry& geometry() const { return geometry_; }
  const Coordinator& coordinator() const { return *coord_; }
  const std::vector<CompletedCav>& completed() const { return completed_; }

private:
  struct Real
  {
    int id = -1;
    int trajectory = 0;
    int ordinal = 0;
    VehicleState state;
    double u = 0.0;
    CostAccumulator cost;
    bool uncooperative = false;
    bool distrusted = false;
  };
  struct PendingArrival
  {
    double time = 0.0;
    int lane = 1;
    Movement movement = Movement::Straight;
    double v0 = 15.0;
  };

  void build_arrivals();
  void phase_events(double t);
  void phase_reports(double t);
  void phase_trust(double t);
  void phase_detection(double t);
  void phase_reschedule(double t);
  void phase_control(double t);
  void phase_integrate(double t);
  void write_trace(double t, std::ostream& os);

  Pose reported_pose(const CavRecord& r) const;
  const Body* body_of(int id) const;

  ScenarioConfig cfg_;
  IntersectionGeometry geometry_;
  std::unique_ptr<Coordinator> coord_;
  std::mt19937_64 rng_;
  std::mt19937_64 noise_rng_;

  std::vector<PendingArrival> schedule_;   // sorted by time
  std::size_t next_arrival_ = 0;
  std::map<int, std::vector<PendingArrival>> waiting_;  // lane -> FIFO
  AttackerSpec attacker_;
  AttackerState attacker_state_;

  std::map<int, Real> reals_;
  std::map<int, FakeAgent> fakes_;
  std::set<int> reported_now_;
  std::map<int, CoObservation> co_obs_;
  std::map<std::pair<int, int>, Observation> estimates_;
  std::vector<Body> world_;
  std::map<int, std::vector<int>> seen_;
  std::map<int, double> applied_u_;
  std::map<int, double> trace_rear_b_;
  std::map<int, double> trace_merge_b_;
  std::map<int, int> last_report_crosser_;  // merge point -> id, by reports
  std::map<int, int> last_true_crosser_;    // merge point -> real id
  std::set<std::tuple<int, int, int>> collided_;  // (lower id, higher id, kind)
  std::set<int> ever_detected_;
  std::set<int> infeasible_streak_;
  bool rescheduled_ = false;
  int next_id_ = 1;
  int real_ordinal_ = 0;
  int uncooperative_assigned_ = 0;

  std::vector<CompletedCav> completed_;
  SummaryMetrics counters_;
};

struct SweepRow
{
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  SummaryMetrics metrics;
};

/// Runs the template once per (value, seed). Axis is "fake_fraction" or
/// "uncooperative".
std::vector<SweepRow> sweep(const ScenarioConfig& base, const std::string& axis,
                            const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os);

}  // namespace cavsim

#endif  // CAVSIM_SIMULATION_HPP_
