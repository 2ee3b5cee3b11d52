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

#include "cavsim/coordinator.hpp"

#include <algorithm>
#include <stdexcept>

namespace cavsim {

const char* to_string(EventKind k)
{
  switch (k) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Departure: return "departure";
    case EventKind::RescheduleTrust: return "reschedule_trust";
    case EventKind::RescheduleLane: return "reschedule_lane";
    case EventKind::RescheduleMitigation: return "reschedule_mitigation";
    case EventKind::OvertakeSwap: return "overtake_swap";
    case EventKind::Infeasible: return "infeasible";
  }
  return "?";
}

std::set<int> SearchResult::all() const
{
  std::set<int> s(rear.begin(), rear.end());
  for (const auto& [mp, ids] : merge) s.insert(ids.begin(), ids.end());
  return s;
}

bool overtake_complete(double x_own, double x_passed, double v_passed, double phi, double delta)
{
  return x_own - x_passed - phi * v_passed - delta >= 0.0;
}

Coordinator::Coordinator(const IntersectionGeometry& geometry, CoordinatorParams params)
    : geometry_(&geometry), params_(params)
{
}

void Coordinator::log(EventRecord e)
{
  e.seq = seq_++;
  events_.push_back(std::move(e));
}

bool Coordinator::contains(int id) const
{
  return std::any_of(queue_.begin(), queue_.end(), [id](const auto& r) { return r.id == id; });
}

CavRecord& Coordinator::at(int id)
{
  for (auto& r : queue_)
    if (r.id == id) return r;
  throw std::out_of_range("coordinator: unknown CAV " + std::to_string(id));
}

const CavRecord& Coordinator::at(int id) const
{
  return const_cast<Coordinator*>(this)->at(id);
}

void Coordinator::renumber()
{
  for (std::size_t n = 0; n < queue_.size(); ++n) queue_[n].index = static_cast<int>(n) + 1;
}

int Coordinator::on_arrival(CavRecord record, double t)
{
  if (contains(record.id))
    throw std::invalid_argument("coordinator: CAV " + std::to_string(record.id) +
                                " is already registered");
  record.index = static_cast<int>(queue_.size()) + 1;
  record.t0 = t;
  queue_.push_back(std::move(record));
  const auto& tr = traj(queue_.back());
  log({EventKind::Arrival, t, 0, {queue_.back().id}, {}, {},
       "l" + std::to_string(tr.entry_lane) + " " + to_string(tr.movement)});
  return queue_.back().index;
}

void Coordinator::on_departure(int id, double t, const std::string& note)
{
  auto it = std::find_if(queue_.begin(), queue_.end(), [id](const auto& r) { return r.id == id; });
  if (it == queue_.end())
    throw std::out_of_range("coordinator: unknown CAV " + std::to_string(id));
  queue_.erase(it);
  renumber();
  for (auto& r : queue_)
    if (r.overtaking == id) r.overtaking.reset();
  log({EventKind::Departure, t, 0, {id}, {}, {}, note});
}

std::optional<double> Coordinator::lead_position(const CavRecord& own, const CavRecord& other) const
{
  return position_in_frame(traj(own), own.reported.x, traj(other), other.reported.x);
}

std::vector<int> Coordinator::lane_predecessors(int id) const
{
  const auto& own = at(id);
  std::vector<int> out;
  for (int n = own.index - 1; n >= 1; --n) {
    const auto& other = at_index(n);
    const auto pos = lead_position(own, other);
    if (pos && *pos > own.reported.x) out.push_back(other.id);
  }
  return out;
}

std::vector<int> Coordinator::merge_predecessors(int id, int mp) const
{
  const auto& own = at(id);
  std::vector<int> out;
  for (int n = own.index - 1; n >= 1; --n) {
    const auto& other = at_index(n);
    if (!traj(other).contains_mp(mp)) continue;
    // Only the latest crosser of a merge point still constrains the next one.
    const auto last = last_crosser(mp);
    if (last && other.crossed.count(mp) && other.id != *last) continue;
    out.push_back(other.id);
  }
  return out;
}

SearchResult Coordinator::default_search(int id) const
{
  const auto& own = at(id);
  SearchResult res;
  const auto rear = lane_predecessors(id);
  if (!rear.empty()) res.rear.push_back(rear.front());
  for (const auto& [mp, s] : traj(own).mp_sequence) {
    if (own.reported.x > s) continue;  // already past it
    const auto prev = merge_predecessors(id, mp);
    if (!prev.empty()) res.merge[mp] = {prev.front()};
  }
  return res;
}

SearchResult Coordinator::trust_based_search(int id, double delta) const
{
  // Walk each ordered set up to and including the first trusted CAV. If no
  // CAV in it is trusted the whole set is kept.
  auto prefix = [&](const std::vector<int>& ordered) {
    std::vector<int> out;
    for (int k : ordered) {
      out.push_back(k);
      if (at(k).trust.tau >= 1.0 - delta) break;
    }
    return out;
  };
  const auto& own = at(id);
  SearchResult res;
  res.rear = prefix(lane_predecessors(id));
  for (const auto& [mp, s] : traj(own).mp_sequence) {
    if (own.reported.x > s) continue;
    auto ids = prefix(merge_predecessors(id, mp));
    if (!ids.empty()) res.merge[mp] = std::move(ids);
  }
  return res;
}

std::optional<int> Coordinator::physical_predecessor(int id) const
{
  const auto& own = at(id);
  std::optional<int> best;
  double best_x = 0.0;
  for (const auto& other : queue_) {
    if (other.id == id) continue;
    const auto pos = lead_position(own, other);
    if (!pos || *pos <= own.reported.x) continue;
    if (!best || *pos < best_x) {
      best = other.id;
      best_x = *pos;
    }
  }
  return best;
}

std::vector<std::pair<int, int>> Coordinator::rear_precedence(
    const std::vector<int>& ids, const std::set<int>& exclude_before) const
{
  std::vector<std::pair<int, int>> out;
  for (int behind : ids) {
    for (int ahead : ids) {
      if (ahead == behind || exclude_before.count(ahead)) continue;
      const auto pos = lead_position(at(behind), at(ahead));
      if (pos && *pos > at(behind).reported.x) out.emplace_back(ahead, behind);
    }
  }
  return out;
}

ScheduleProblem Coordinator::candidates_from(int k_min) const
{
  ScheduleProblem p;
  p.k_min = k_min;
  p.nu = params_.nu;
  p.exact_cap = params_.exact_cap;
  for (int n = k_min; n <= static_cast<int>(queue_.size()); ++n) p.ids.push_back(at_index(n).id);
  return p;
}

void Coordinator::add_pins(ScheduleProblem& p) const
{
  // CAVs past the rescheduling zone may be too close to a merge point to
  // brake for a new predecessor: they keep their order against every
  // candidate, which also keeps their index.
  const double L1 = geometry_->rescheduling_length();
  for (std::size_t a = 0; a < p.ids.size(); ++a) {
    if (at(p.ids[a]).reported.x < L1) continue;
    for (std::size_t b = 0; b < p.ids.size(); ++b) {
      if (b < a) p.precedence.emplace_back(p.ids[b], p.ids[a]);
      if (b > a) p.precedence.emplace_back(p.ids[a], p.ids[b]);
    }
  }
  std::sort(p.precedence.begin(), p.precedence.end());
  p.precedence.erase(std::unique(p.precedence.begin(), p.precedence.end()), p.precedence.end());
}

std::optional<ScheduleProblem> Coordinator::trust_reschedule_trigger() const
{
  const double L1 = geometry_->rescheduling_length();
  std::vector<int> low;
  for (const auto& r : queue_) {
    if (r.reported.x >= L1) continue;
    if (r.tau_prev - r.trust.tau >= 0.0 && r.trust.tau <= params_.delta) low.push_back(r.index);
  }
  if (low.empty()) return std::nullopt;
  if (static_cast<double>(low.size()) < params_.allowable_low_trust * queue_.size())
    return std::nullopt;
  auto p = candidates_from(*std::min_element(low.begin(), low.end()));
  for (int id : p.ids) p.weights.push_back(1.0 - at(id).trust.tau);
  p.precedence = rear_precedence(p.ids, {});
  add_pins(p);
  return p;
}

std::vector<int> Coordinator::slow_now() const
{
  std::vector<int> out;
  for (const auto& r : queue_) {
    if (r.reported.v > params_.v_low) continue;
    // Slow CAVs queued behind a slow CAV in their own lane still count.
    bool explained = false;
    const auto search = trust_based_search(r.id, params_.delta);
    for (const auto& [mp, ids] : search.merge)
      for (int k : ids)
        explained = explained ||
                    (at(k).entry_lane != r.entry_lane && at(k).reported.v <= params_.v_low);
    if (!explained) out.push_back(r.id);
  }
  return out;
}

void Coordinator::update_slow_timers(double t)
{
  slow_clock_ = t;
  const auto slow = slow_now();
  const std::set<int> now(slow.begin(), slow.end());
  for (auto& r : queue_) {
    if (!now.count(r.id))
      r.slow_since.reset();
    else if (!r.slow_since)
      r.slow_since = t;
  }
}

void Coordinator::update_crossings()
{
  std::map<int, std::pair<double, int>> fresh;  // mp -> (distance past, id)
  for (auto& r : queue_) {
    for (const auto& [mp, s] : traj(r).mp_sequence) {
      if (r.reported.x < s || r.crossed.count(mp)) continue;
      r.crossed.insert(mp);
      const double past = r.reported.x - s;
      auto it = fresh.find(mp);
      if (it == fresh.end() || past < it->second.first) fresh[mp] = {past, r.id};
    }
  }
  for (const auto& [mp, entry] : fresh) last_crosser_[mp] = entry.second;
}

std::optional<int> Coordinator::last_crosser(int mp) const
{
  const auto it = last_crosser_.find(mp);
  if (it == last_crosser_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Coordinator::uncooperative_set() const
{
  auto out = slow_now();
  if (params_.slow_dwell <= 0.0) return out;
  // Tolerance keeps a dwell of a whole number of steps exact.
  std::erase_if(out, [&](int id) {
    const auto& since = at(id).slow_since;
    return !since || slow_clock_ - *since < params_.slow_dwell - 1e-9;
  });
  return out;
}

std::map<int, double> Coordinator::lane_priorities() const
{
  std::map<int, int> count;
  for (const auto& lane : geometry_->lanes()) count[lane.id] = 0;
  int total = 0;
  for (int id : uncooperative_set()) {
    ++count[at(id).entry_lane];
    ++total;
  }
  std::map<int, double> zeta;
  for (const auto& [lane, n] : count)
    zeta[lane] = total == 0 ? 1.0 : 1.0 - n / (total + params_.lane_c);
  return zeta;
}

std::optional<ScheduleProblem> Coordinator::lane_reschedule_trigger() const
{
  const auto slow = uncooperative_set();
  if (slow.empty()) return std::nullopt;
  const std::set<int> slow_set(slow.begin(), slow.end());
  int k_min = static_cast<int>(queue_.size());
  for (int id : slow) k_min = std::min(k_min, at(id).index);
  auto p = candidates_from(k_min);
  std::size_t free = 0;
  for (int id : p.ids) {
    const auto ip = physical_predecessor(id);
    if (!ip || !slow_set.count(*ip)) ++free;
  }
  if (static_cast<double>(free) < params_.lane_threshold * p.ids.size()) return std::nullopt;
  const auto zeta = lane_priorities();
  for (int id : p.ids) p.weights.push_back(1.0 - zeta.at(at(id).entry_lane));
  p.precedence = rear_precedence(p.ids, {});
  add_pins(p);
  return p;
}

ScheduleProblem Coordinator::mitigation_problem(const std::vector<int>& flagged) const
{
  const std::set<int> fl(flagged.begin(), flagged.end());
  const double L1 = geometry_->rescheduling_length();
  int k_min = static_cast<int>(queue_.size()) + 1;
  for (int id : flagged)
    if (at(id).reported.x < L1) k_min = std::min(k_min, at(id).index);
  ScheduleProblem p = candidates_from(std::min<int>(k_min, static_cast<int>(queue_.size()) + 1));
  for (int id : p.ids) p.weights.push_back(fl.count(id) ? 1.0 : 0.0);
  p.precedence = rear_precedence(p.ids, fl);
  // Real CAVs that meet at a merge point keep their relative order.
  for (std::size_t a = 0; a < p.ids.size(); ++a) {
    for (std::size_t b = a + 1; b < p.ids.size(); ++b) {
      const int k = p.ids[a], j = p.ids[b];
      if (fl.count(k) || fl.count(j)) continue;
      if (!conflict_points(traj(at(k)), traj(at(j))).empty()) p.precedence.emplace_back(k, j);
    }
  }
  add_pins(p);
  return p;
}

bool Coordinator::apply_schedule(const ScheduleResult& result, EventKind kind, double t,
                                 const std::string& note)
{
  EventRecord e{kind, t, 0, {}, {}, {}, note};
  bool changed = false;
  for (const auto& [id, idx] : result.index) {
    const int old = at(id).index;
    e.ids.push_back(id);
    e.old_index[id] = old;
    e.new_index[id] = idx;
    changed = changed || old != idx;
  }
  if (!changed) return false;
  for (const auto& [id, idx] : result.index) at(id).index = idx;
  std::stable_sort(queue_.begin(), queue_.end(),
                   [](const auto& a, const auto& b) { return a.index < b.index; });
  renumber();
  log(std::move(e));
  return true;
}

bool Coordinator::mitigation_reschedule(double t)
{
  std::vector<int> flagged;
  for (const auto& r : queue_)
    if (r.detected_fake) flagged.push_back(r.id);
  if (flagged.empty()) return false;
  const auto problem = mitigation_problem(flagged);
  if (problem.ids.empty()) return false;
  const auto result = solve_schedule(problem);
  if (!result.feasible) return false;

  return apply_schedule(result, EventKind::RescheduleMitigation, t,
                        result.exact ? "" : "greedy fallback");
}

void Coordinator::swap_indices(int a, int b, double t)
{
  auto& ra = at(a);
  auto& rb = at(b);
  EventRecord e{EventKind::OvertakeSwap, t, 0, {a, b}, {{a, ra.index}, {b, rb.index}},
                {{a, rb.index}, {b, ra.index}}, ""};
  std::swap(ra.index, rb.index);
  std::stable_sort(queue_.begin(), queue_.end(),
                   [](const auto& x, const auto& y) { return x.index < y.index; });
  log(std::move(e));
}

ConflictInfo Coordinator::conflict_info_for(int id, const SearchResult& search, bool mitigation,
                                            const SensingView& sensing) const
{
  const auto& own = at(id);
  const auto& own_traj = traj(own);
  ConflictInfo info;
  const auto pred = physical_predecessor(id);

  // Decides what happens to a row against `k`; false drops it.
  auto treat = [&](int k, ConflictEntry& entry) {
    if (!mitigation || !at(k).detected_fake) return true;
    const bool in_range = sensing.in_range && sensing.in_range(k);
    const bool seen = sensing.visible && sensing.visible(k);
    if (in_range && !seen) {
      if (std::find(info.dropped.begin(), info.dropped.end(), k) == info.dropped.end())
        info.dropped.push_back(k);
      return false;
    }
    if (!in_range) entry.extra_gain = params_.rho;
    return true;
  };

  for (int k : search.rear) {
    const auto& other = at(k);
    ConflictEntry e;
    e.kind = ConflictEntry::Kind::Rear;
    e.other = k;
    e.reported = other.reported;
    e.lead_x = lead_position(own, other).value_or(other.reported.x);
    if (treat(k, e)) info.entries.push_back(e);
    else if (pred == k) info.overtake = k;
  }
  // A flagged physical predecessor may sit behind in the order after a
  // mitigation reschedule; the follower still has to account for it.
  if (mitigation && pred && at(*pred).detected_fake &&
      std::find(search.rear.begin(), search.rear.end(), *pred) == search.rear.end()) {
    const auto& other = at(*pred);
    ConflictEntry e;
    e.kind = ConflictEntry::Kind::Rear;
    e.other = *pred;
    e.reported = other.reported;
    e.lead_x = lead_position(own, other).value_or(other.reported.x);
    if (treat(*pred, e)) info.entries.push_back(e);
    else info.overtake = *pred;
  }
  for (const auto& [mp, ids] : search.merge) {
    for (int k : ids) {
      const auto& other = at(k);
      ConflictEntry e;
      e.kind = ConflictEntry::Kind::Merge;
      e.other = k;
      e.mp = mp;
      e.reported = other.reported;
      e.dist_own = own_traj.mp_distance(mp) - own.reported.x;
      e.dist_other = traj(other).mp_distance(mp) - other.reported.x;
      if (treat(k, e)) info.entries.push_back(e);
    }
  }
  return info;
}

}  // namespace cavsim
