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

#ifndef CAVSIM_COORDINATOR_HPP_
#define CAVSIM_COORDINATOR_HPP_

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cavsim/dynamics.hpp"
#include "cavsim/geometry.hpp"
#include "cavsim/schedule.hpp"
#include "cavsim/trust.hpp"

namespace cavsim {

/// One row of the queue table.
struct CavRecord
{
  int id = -1;
  int index = 0;  // 1-based queue position
  int entry_lane = 0;
  int trajectory = 0;
  double t0 = 0.0;

  // Latest report and the history the dynamic-model check needs.
  bool has_report = false;
  VehicleState reported;
  double reported_u = 0.0;
  double last_report_time = 0.0;
  std::optional<VehicleState> initial_report;
  std::optional<VehicleState> previous_report;
  double previous_u = 0.0;

  TrustState trust;
  double tau_prev = 0.0;  // trust at the end of the previous step
  Verdict verdict = Verdict::None;
  bool detected_fake = false;

  // Merge points this CAV has reported itself past.
  std::set<int> crossed;

  // Start of the current run of unexplained slow reports, if any.
  std::optional<double> slow_since;

  // Overtake of a flagged physical predecessor in progress.
  std::optional<int> overtaking;

  // Ground truth. Never read by search, scheduling or control.
  bool fake = false;
  bool uncooperative = false;
};

enum class EventKind { Arrival, Departure, RescheduleTrust, RescheduleLane, RescheduleMitigation, OvertakeSwap, Infeasible };
const char* to_string(EventKind k);

struct EventRecord
{
  EventKind kind = EventKind::Arrival;
  double time = 0.0;
  long seq = 0;
  std::vector<int> ids;
  std::map<int, int> old_index;  // id -> index, reschedules only
  std::map<int, int> new_index;
  std::string note;
};

struct CoordinatorParams
{
  double delta = 0.1;
  double allowable_low_trust = 0.1;  // A
  double lane_threshold = 0.5;       // A_l
  int nu = 1;
  double v_low = 3.0;
  double lane_c = 1e-6;
  std::size_t exact_cap = 12;
  double phi = 1.8;
  double safe_delta = 3.78;
  double rho = 1.0;
  double slow_dwell = 1.0;  // seconds a CAV must stay slow to count as uncooperative
};

/// Conflict-predecessor sets of one CAV. Lists are ordered nearest index
/// first.
struct SearchResult
{
  std::vector<int> rear;
  std::map<int, std::vector<int>> merge;  // merge point id -> ids

  std::set<int> all() const;
};

/// How a CAV's row against one conflict CAV is to be built.
struct ConflictEntry
{
  enum class Kind { Rear, Merge } kind = Kind::Rear;
  int other = -1;
  int mp = -1;
  VehicleState reported;
  double lead_x = 0.0;      // rear: other's position in the own arc coordinate
  double dist_own = 0.0;    // merge: remaining distances to the merge point
  double dist_other = 0.0;
  double extra_gain = 0.0;  // relaxation for flagged, out-of-range CAVs
};

struct ConflictInfo
{
  std::vector<ConflictEntry> entries;
  std::vector<int> dropped;       // flagged CAVs in range that the sensor cannot see
  std::optional<int> overtake;    // flagged physical predecessor being passed
};

/// Local sensing of one CAV as seen by the coordinator's mitigation logic.
struct SensingView
{
  std::function<bool(int)> in_range;  // other's reported position in footprint
  std::function<bool(int)> visible;   // other actually detected
};

/// Overtake completion: the passing CAV is a safe following distance ahead.
bool overtake_complete(double x_own, double x_passed, double v_passed, double phi, double delta);

class Coordinator
{
public:
  Coordinator(const IntersectionGeometry& geometry, CoordinatorParams params);

  const CoordinatorParams& params() const { return params_; }
  const IntersectionGeometry& geometry() const { return *geometry_; }

  /// FIFO registration; throws std::invalid_argument on a duplicate id.
  int on_arrival(CavRecord record, double t);
  /// Removes the row and closes the gap; throws std::out_of_range for an
  /// unknown id.
  void on_departure(int id, double t, const std::string& note = "");

  std::size_t size() const { return queue_.size(); }
  bool contains(int id) const;
  const std::vector<CavRecord>& queue() const { return queue_; }
  CavRecord& at(int id);
  const CavRecord& at(int id) const;
  const CavRecord& at_index(int index) const { return queue_.at(index - 1); }
  const std::vector<EventRecord>& events() const { return events_; }
  void log(EventRecord e);

  /// Lower-index CAVs that share road with `id` ahead of it (nearest index
  /// first), by reported state.
  std::vector<int> lane_predecessors(int id) const;
  /// Lower-index CAVs whose path contains `mp`, nearest index first.
  std::vector<int> merge_predecessors(int id, int mp) const;

  SearchResult default_search(int id) const;
  SearchResult trust_based_search(int id, double delta) const;

  std::optional<ScheduleProblem> trust_reschedule_trigger() const;
  std::optional<ScheduleProblem> lane_reschedule_trigger() const;
  std::map<int, double> lane_priorities() const;
  /// Slow CAVs not explained by a slow CAV from another lane at a shared
  /// merge point, as of the current reports.
  std::vector<int> slow_now() const;
  /// Starts or clears each CAV's slow timer from slow_now().
  void update_slow_timers(double t);
  /// Records merge point crossings from the current reports. Once a merge
  /// point has a recorded crosser, CAVs that crossed it earlier drop out of
  /// later CAVs' merge predecessors there.
  void update_crossings();
  std::optional<int> last_crosser(int mp) const;
  /// CAVs that have been in slow_now() for at least slow_dwell seconds. With
  /// a zero dwell this is slow_now() itself.
  std::vector<int> uncooperative_set() const;

  ScheduleProblem mitigation_problem(const std::vector<int>& flagged) const;
  /// Solves the mitigation program for all detected fakes and keeps each
  /// flagged CAV just ahead of a real CAV physically following it, so the
  /// follower can pass it. Returns true if the order changed.
  bool mitigation_reschedule(double t);

  /// Applies a solved schedule; returns true and logs if the order changed.
  bool apply_schedule(const ScheduleResult& result, EventKind kind, double t,
                      const std::string& note = "");

  ConflictInfo conflict_info_for(int id, const SearchResult& search, bool mitigation,
                                 const SensingView& sensing) const;

  /// Swaps the queue positions of two CAVs.
  void swap_indices(int a, int b, double t);

private:
  const Trajectory& traj(const CavRecord& r) const { return geometry_->trajectory(r.trajectory); }
  std::optional<double> lead_position(const CavRecord& own, const CavRecord& other) const;
  std::optional<int> physical_predecessor(int id) const;
  std::vector<std::pair<int, int>> rear_precedence(const std::vector<int>& ids,
                                                   const std::set<int>& exclude_before) const;
  void add_pins(ScheduleProblem& p) const;
  ScheduleProblem candidates_from(int k_min) const;
  void renumber();

  const IntersectionGeometry* geometry_;
  CoordinatorParams params_;
  std::vector<CavRecord> queue_;
  std::vector<EventRecord> events_;
  double slow_clock_ = 0.0;
  std::map<int, int> last_crosser_;  // merge point id -> id, kept after departure
  long seq_ = 0;
};

}  // namespace cavsim

#endif  // CAVSIM_COORDINATOR_HPP_
