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

#include "cavsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace cavsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-9;
// Round-off floor for counting a pair as collided; queues at standstill sit
// exactly on the barrier boundary.
constexpr double kCollisionTol = 1e-9;

std::string fmt(double v)
{
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

nlohmann::ordered_json number_or_null(double v)
{
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::ordered_json optional_number(const std::optional<double>& v)
{
  if (!v) return nullptr;
  return *v;
}

}  // namespace

const char* const kTraceHeader =
    "t,cav_id,index,zone,x,v,u,x_rep,v_rep,tau,R,P,verdict,min_rear_b,min_merge_b";

SummaryMetrics summarize(const std::vector<CompletedCav>& completed, SummaryMetrics counters)
{
  double time = 0.0, energy = 0.0, fuel = 0.0;
  int n = 0;
  for (const auto& c : completed) {
    if (!c.real) continue;
    time += c.travel_time;
    energy += c.energy;
    fuel += c.fuel;
    ++n;
  }
  counters.completed_real = n;
  if (n > 0) {
    counters.avg_travel_time = time / n;
    counters.avg_energy = energy / n;
    counters.avg_fuel = fuel / n;
  } else {
    counters.avg_travel_time.reset();
    counters.avg_energy.reset();
    counters.avg_fuel.reset();
  }
  return counters;
}

std::string summary_to_json(const SummaryMetrics& m, int indent)
{
  nlohmann::ordered_json j;
  j["real_count"] = m.real_count;
  j["fake_count"] = m.fake_count;
  j["uncooperative_count"] = m.uncooperative_count;
  j["completed_real"] = m.completed_real;
  j["unfinished_real"] = m.unfinished_real;
  j["avg_travel_time"] = optional_number(m.avg_travel_time);
  j["avg_energy"] = optional_number(m.avg_energy);
  j["avg_fuel"] = optional_number(m.avg_fuel);
  j["collisions"] = m.collisions;
  j["min_rear_b"] = number_or_null(m.min_rear_b);
  j["min_merge_b"] = number_or_null(m.min_merge_b);
  j["infeasible_steps"] = m.infeasible_steps;
  j["infeasible_after_reschedule"] = m.infeasible_after_reschedule;
  j["reschedules"] = {{"trust", m.reschedules_trust},
                      {"lane", m.reschedules_lane},
                      {"mitigation", m.reschedules_mitigation}};
  j["overtake_swaps"] = m.overtake_swaps;
  j["detected_fakes"] = m.detected_fakes;
  j["false_positives"] = m.false_positives;
  j["false_negatives"] = m.false_negatives;
  j["overtakes_of_visible_real"] = m.overtakes_of_visible_real;
  j["trust_bound_violations"] = m.trust_bound_violations;
  j["max_R"] = m.max_R;
  j["sim_time"] = m.sim_time;
  j["steps"] = m.steps;
  return j.dump(indent);
}

Simulation::Simulation(ScenarioConfig config)
    : cfg_((config.sync_derived(), std::move(config))),
      geometry_(build_intersection(cfg_.geometry)),
      rng_(cfg_.seed),
      noise_rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ULL),
      attacker_(cfg_.attacker)
{
  cfg_.validate();
  coord_ = std::make_unique<Coordinator>(geometry_, cfg_.coordinator);
  build_arrivals();
  counters_.min_rear_b = kInf;
  counters_.min_merge_b = kInf;
}

Simulation::~Simulation() = default;

void Simulation::build_arrivals()
{
  std::vector<std::pair<PendingArrival, bool>> draws;  // arrival, is fake
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& lane : geometry_.lanes()) {
    const double rate = cfg_.arrivals.rate[lane.id - 1];
    if (rate <= 0.0) continue;
    std::exponential_distribution<double> gap(rate);
    double t = 0.0;
    for (;;) {
      t += gap(rng_);
      if (t > cfg_.arrivals.horizon) break;
      // Both coins are always drawn so that sweeping the fake share keeps the
      // rest of the arrival stream unchanged.
      const double turn = unit(rng_);
      const double fake = unit(rng_);
      Movement m = Movement::Straight;
      if (turn < cfg_.arrivals.turn_probability)
        m = lane.leftmost ? Movement::Left : Movement::Right;
      if (!geometry_.has_trajectory(lane.id, m)) m = Movement::Straight;
      const bool is_fake = attacker_.enabled && fake < attacker_.fraction;
      draws.push_back({{t, lane.id, m, cfg_.arrivals.v0}, is_fake});
    }
  }
  for (const auto& a : cfg_.arrivals.explicit_arrivals)
    draws.push_back({{a.time, a.lane, a.movement, a.v0}, false});
  std::stable_sort(draws.begin(), draws.end(), [](const auto& a, const auto& b) {
    if (a.first.time != b.first.time) return a.first.time < b.first.time;
    return a.first.lane < b.first.lane;
  });
  for (const auto& [a, is_fake] : draws) {
    if (is_fake)
      attacker_.spawns.push_back({a.time, a.lane, a.movement, a.v0});
    else
      schedule_.push_back(a);
  }
  std::stable_sort(attacker_.spawns.begin(), attacker_.spawns.end(),
                   [](const FakeSpawn& a, const FakeSpawn& b) { return a.time < b.time; });
}

Pose Simulation::reported_pose(const CavRecord& r) const
{
  const auto& tr = geometry_.trajectory(r.trajectory);
  return tr.pose_at(std::clamp(r.reported.x, 0.0, tr.total_length));
}

const Body* Simulation::body_of(int id) const
{
  for (const auto& b : world_)
    if (b.id == id) return &b;
  return nullptr;
}

void Simulation::phase_events(double t)
{
  // Departures.
  std::vector<int> leaving;
  for (const auto& rec : coord_->queue()) {
    const auto& tr = geometry_.trajectory(rec.trajectory);
    if (!rec.fake) {
      if (reals_.at(rec.id).state.x >= tr.total_length) leaving.push_back(rec.id);
    } else if ((rec.has_report && rec.reported.x >= tr.total_length) ||
               t - rec.last_report_time >= cfg_.report_timeout - kTimeEps) {
      leaving.push_back(rec.id);
    }
  }
  for (int id : leaving) {
    const auto& rec = coord_->at(id);
    if (rec.fake) {
      if (!ever_detected_.count(id)) ++counters_.false_negatives;
      const bool silent = t - rec.last_report_time >= cfg_.report_timeout - kTimeEps;
      fakes_.erase(id);
      coord_->on_departure(id, t, silent ? "stopped reporting" : "exited");
    } else {
      const auto& r = reals_.at(id);
      completed_.push_back({id, true, t - rec.t0, r.cost.energy, r.cost.fuel});
      reals_.erase(id);
      coord_->on_departure(id, t, "exited");
    }
    for (auto* crossers : {&last_report_crosser_, &last_true_crosser_})
      for (auto it = crossers->begin(); it != crossers->end();)
        it = it->second == id ? crossers->erase(it) : std::next(it);
  }

  // Real arrivals wait at the lane entry until the entry gap is safe.
  while (next_arrival_ < schedule_.size() && schedule_[next_arrival_].time <= t + kTimeEps) {
    const auto& a = schedule_[next_arrival_++];
    waiting_[a.lane].push_back(a);
  }
  for (auto& [lane, fifo] : waiting_) {
    if (fifo.empty()) continue;
    const auto a = fifo.front();
    double last_x = kInf;
    for (const auto& rec : coord_->queue())
      if (rec.entry_lane == lane) last_x = std::min(last_x, rec.reported.x);
    double v0 = a.v0;
    if (std::isfinite(last_x)) {
      const double room = (last_x - cfg_.delta) / cfg_.phi;
      if (room < 0.0) continue;
      v0 = std::min(v0, room);
    }
    fifo.erase(fifo.begin());

    Real r;
    r.id = next_id_++;
    r.trajectory = geometry_.trajectory(lane, a.movement).id;
    r.ordinal = ++real_ordinal_;
    r.state = {0.0, v0, t};
    const auto& spec = cfg_.uncooperative;
    const bool listed =
        std::find(spec.ordinals.begin(), spec.ordinals.end(), r.ordinal) != spec.ordinals.end();
    const bool lane_ok =
        spec.lanes.empty() || std::find(spec.lanes.begin(), spec.lanes.end(), lane) != spec.lanes.end();
    if (listed || (uncooperative_assigned_ < spec.count && lane_ok)) {
      r.uncooperative = true;
      if (!listed) ++uncooperative_assigned_;
      ++counters_.uncooperative_count;
    }
    const auto& ds = cfg_.distrust.ordinals;
    r.distrusted = std::find(ds.begin(), ds.end(), r.ordinal) != ds.end();

    CavRecord rec;
    rec.id = r.id;
    rec.entry_lane = lane;
    rec.trajectory = r.trajectory;
    rec.reported = r.state;
    rec.uncooperative = r.uncooperative;
    rec.last_report_time = t;
    reals_.emplace(r.id, r);
    coord_->on_arrival(rec, t);
    ++counters_.real_count;
  }

  // Fake identities.
  for (const auto& s :
       spawn_fakes(attacker_state_, attacker_, t, static_cast<int>(fakes_.size()))) {
    const Movement m = geometry_.has_trajectory(s.lane, s.movement) ? s.movement : Movement::Straight;
    FakeAgent f;
    f.id = next_id_++;
    f.trajectory = geometry_.trajectory(s.lane, m).id;
    f.model = attacker_.model;
    f.state = {0.0, f.model == AttackerModel::Naive ? attacker_.naive_speed : s.v0, t};
    f.spawn_time = t;
    CavRecord rec;
    rec.id = f.id;
    rec.entry_lane = s.lane;
    rec.trajectory = f.trajectory;
    rec.reported = f.state;
    rec.fake = true;
    rec.last_report_time = t;
    fakes_.emplace(f.id, f);
    coord_->on_arrival(rec, t);
    ++counters_.fake_count;
  }
}

void Simulation::phase_reports(double t)
{
  reported_now_.clear();
  for (const auto& entry : coord_->queue()) {
    auto& rec = coord_->at(entry.id);
    VehicleState report;
    double u = 0.0;
    if (!rec.fake) {
      const auto& r = reals_.at(rec.id);
      report = r.state;
      u = r.u;
    } else {
      const auto& f = fakes_.at(rec.id);
      if (!fake_reporting(f, attacker_, t)) continue;
      const auto fr = fake_report(f, attacker_);
      report = {fr.x, fr.v, t};
      u = fr.u;
    }
    if (rec.has_report) {
      rec.previous_report = rec.reported;
      rec.previous_u = rec.reported_u;
    } else {
      rec.initial_report = report;
    }
    rec.has_report = true;
    rec.reported = report;
    rec.reported_u = u;
    rec.last_report_time = t;
    reported_now_.insert(rec.id);
  }

  // Sensing by real bodies; fake identities claim to see whatever their
  // reported pose implies.
  world_.clear();
  for (const auto& [id, r] : reals_)
    world_.push_back({id, geometry_.trajectory(r.trajectory).pose_at(r.state.x), r.state});
  std::vector<ReportedPose> poses;
  for (const auto& rec : coord_->queue())
    if (reported_now_.count(rec.id)) poses.push_back({rec.id, reported_pose(rec)});
  seen_.clear();
  for (const auto& body : world_) seen_[body.id] = visible_set(body, world_, cfg_.sensor);
  for (const auto& p : poses) {
    if (!fakes_.count(p.id)) continue;
    auto& list = seen_[p.id];
    for (const auto& q : poses)
      if (q.id != p.id && in_footprint(p.pose, q.pose.position, cfg_.sensor)) list.push_back(q.id);
  }
  co_obs_ = co_observation_report(poses, seen_, cfg_.sensor);
  estimates_.clear();
  coord_->update_crossings();
}

void Simulation::phase_trust(double t)
{
  std::map<int, double> snapshot;
  for (const auto& rec : coord_->queue()) snapshot[rec.id] = rec.trust.tau;
  const TrustLookup lookup = [&snapshot](int k) {
    const auto it = snapshot.find(k);
    return it == snapshot.end() ? 0.0 : it->second;
  };

  // Pointwise merge rule on reports: each crossing is compared with the
  // previous reporter that crossed the same merge point.
  struct Crossing
  {
    double overshoot;
    int id;
    int mp;
    double s;
  };
  std::vector<Crossing> crossings;
  for (const auto& rec : coord_->queue()) {
    if (!reported_now_.count(rec.id) || !rec.previous_report) continue;
    for (const auto& [mp, s] : geometry_.trajectory(rec.trajectory).mp_sequence)
      if (rec.previous_report->x < s && rec.reported.x >= s)
        crossings.push_back({rec.reported.x - s, rec.id, mp, s});
  }
  std::stable_sort(crossings.begin(), crossings.end(),
                   [](const Crossing& a, const Crossing& b) { return a.overshoot > b.overshoot; });
  std::map<int, std::vector<RuleEvaluation>> merge_rules;
  for (const auto& c : crossings) {
    const auto it = last_report_crosser_.find(c.mp);
    if (it != last_report_crosser_.end() && it->second != c.id && coord_->contains(it->second)) {
      const auto& lead = coord_->at(it->second);
      if (!lead.detected_fake) {
        const auto& own = coord_->at(c.id);
        const double gap =
            (lead.reported.x - geometry_.trajectory(lead.trajectory).mp_distance(c.mp)) - c.overshoot;
        merge_rules[c.id].push_back({lead.id, following_barrier(gap, own.reported.v, cfg_.phi, cfg_.delta)});
      }
    }
    last_report_crosser_[c.mp] = c.id;
  }

  for (const auto& entry : coord_->queue()) {
    auto& rec = coord_->at(entry.id);
    CheckInputs in;
    if (const auto it = co_obs_.find(rec.id); it != co_obs_.end()) {
      in.expected_observers = it->second.expected;
      in.reporting_observers = it->second.reported;
    }
    in.initial_report = rec.initial_report;
    in.previous_report = rec.previous_report;
    in.previous_u = rec.previous_u;
    const bool reported = reported_now_.count(rec.id) > 0;
    if (reported) {
      // A report carries the input applied since the previous report.
      in.report = rec.reported;
      in.reported_u = rec.reported_u;
      in.previous_u = rec.reported_u;
      const auto search = coord_->default_search(rec.id);
      if (!search.rear.empty()) {
        const auto& lead = coord_->at(search.rear.front());
        const auto pos = position_in_frame(geometry_.trajectory(rec.trajectory), rec.reported.x,
                                           geometry_.trajectory(lead.trajectory), lead.reported.x);
        if (pos && !lead.detected_fake)
          in.pairwise_rules.push_back(
              {lead.id, following_barrier(*pos - rec.reported.x, rec.reported.v, cfg_.phi, cfg_.delta)});
      }
      for (const auto& r : merge_rules[rec.id]) in.pairwise_rules.push_back(r);
    }
    auto ev = run_checks(in, cfg_.limits, cfg_.ts, cfg_.trust);
    if (!rec.fake) {
      const auto& r = reals_.at(rec.id);
      if (r.distrusted && t >= cfg_.distrust.from - kTimeEps && t < cfg_.distrust.until) {
        ev.r[0] = 0.0;
        ev.p[0] = cfg_.trust.p[0];
        ev.involved[0].clear();
      }
    }
    rec.tau_prev = rec.trust.tau;
    rec.trust = update_trust(rec.trust, ev, lookup, cfg_.trust.gamma);
    counters_.max_R = std::max(counters_.max_R, rec.trust.R);
    if (rec.trust.R > cfg_.trust.evidence_bound() + 1e-9) ++counters_.trust_bound_violations;
  }
}

void Simulation::phase_detection(double t)
{
  bool newly_detected = false;
  for (const auto& entry : coord_->queue()) {
    auto& rec = coord_->at(entry.id);
    rec.verdict = detect_fake(rec.trust, cfg_.coordinator.delta, cfg_.trust.eta);
    if (rec.verdict == Verdict::Fake && !rec.detected_fake) {
      rec.detected_fake = true;
      ever_detected_.insert(rec.id);
      newly_detected = true;
      if (rec.fake)
        ++counters_.detected_fakes;
      else
        ++counters_.false_positives;
    }
  }
  if (!cfg_.mitigation) return;
  if (newly_detected && coord_->mitigation_reschedule(t)) rescheduled_ = true;

  // Finished overtakes hand the passed identity's slot to the overtaker.
  std::vector<std::pair<int, int>> done;
  for (const auto& rec : coord_->queue()) {
    if (!rec.overtaking) continue;
    const int k = *rec.overtaking;
    if (!coord_->contains(k)) {
      done.push_back({rec.id, -1});
      continue;
    }
    const auto& other = coord_->at(k);
    const auto pos = position_in_frame(geometry_.trajectory(rec.trajectory), rec.reported.x,
                                       geometry_.trajectory(other.trajectory), other.reported.x);
    if (!pos) {
      done.push_back({rec.id, -1});
    } else if (overtake_complete(rec.reported.x, *pos, other.reported.v, cfg_.phi, cfg_.delta)) {
      done.push_back({rec.id, k});
    }
  }
  for (const auto& [id, k] : done) {
    auto& rec = coord_->at(id);
    rec.overtaking.reset();
    if (k < 0) continue;
    if (!coord_->at(k).fake) ++counters_.overtakes_of_visible_real;
    if (coord_->at(k).index < rec.index) coord_->swap_indices(id, k, t);
  }
}

void Simulation::phase_reschedule(double t)
{
  auto attempt = [&](const std::optional<ScheduleProblem>& problem, EventKind kind) {
    if (!problem) return;
    try {
      const auto result = solve_schedule(*problem);
      if (coord_->apply_schedule(result, kind, t)) rescheduled_ = true;
    } catch (const std::invalid_argument& e) {
      coord_->log({EventKind::Infeasible, t, 0, problem->ids, {}, {}, e.what()});
    }
  };
  if (cfg_.scheme == Scheme::Trust || cfg_.scheme == Scheme::Both)
    attempt(coord_->trust_reschedule_trigger(), EventKind::RescheduleTrust);
  if (cfg_.scheme == Scheme::Lane || cfg_.scheme == Scheme::Both) {
    coord_->update_slow_timers(t);
    attempt(coord_->lane_reschedule_trigger(), EventKind::RescheduleLane);
  }
}

void Simulation::phase_control(double t)
{
  const auto& gains = cfg_.gains;
  const auto& lim = cfg_.limits;
  applied_u_.clear();
  for (const auto& entry : coord_->queue()) {
    const int id = entry.id;
    const bool real = !entry.fake;
    VehicleState own;
    double v_free = cfg_.v_free;
    std::optional<double> v_low;
    bool rules = true;
    if (real) {
      const auto& r = reals_.at(id);
      own = r.state;
      v_low = uncooperative_override(r.uncooperative, cfg_.uncooperative, cfg_.coordinator.v_low);
    } else {
      const auto& f = fakes_.at(id);
      if (f.model == AttackerModel::Naive) continue;
      own = f.state;
      v_free = fake_cruise_speed(f, attacker_);
      rules = f.model != AttackerModel::DynamicsAware;
    }
    const auto& own_traj = geometry_.trajectory(entry.trajectory);

    StepProgram prog;
    prog.lambda = gains.lambda;
    prog.u_min = lim.u_min;
    prog.u_max = lim.u_max;
    prog.constraints = limit_constraints(own, lim, gains);

    ConflictInfo info;
    if (rules) {
      const auto search = cfg_.trust_search
                              ? coord_->trust_based_search(id, cfg_.coordinator.delta)
                              : coord_->default_search(id);
      const Body* own_body = real ? body_of(id) : nullptr;
      SensingView view;
      if (own_body) {
        view.in_range = [&, own_body](int k) {
          return in_footprint(own_body->pose, reported_pose(coord_->at(k)).position, cfg_.sensor);
        };
        view.visible = [&, id](int k) {
          const auto& s = seen_[id];
          return std::find(s.begin(), s.end(), k) != s.end();
        };
      }
      info = coord_->conflict_info_for(id, search, cfg_.mitigation && real, view);

      // Local estimate of a visible real CAV, drawn once per pair and step.
      auto estimate = [&](int k) -> std::optional<Observation> {
        if (!own_body || !cfg_.robust_rows) return std::nullopt;
        const auto& s = seen_[id];
        if (std::find(s.begin(), s.end(), k) == s.end()) return std::nullopt;
        const Body* target = body_of(k);
        if (!target) return std::nullopt;
        const auto key = std::make_pair(id, k);
        auto it = estimates_.find(key);
        if (it == estimates_.end())
          it = estimates_.emplace(key, observe(*own_body, *target, cfg_.sensor, noise_rng_)).first;
        return it->second;
      };
      const double margin = cfg_.sensor.epsilon * (1.0 + cfg_.phi);

      for (const auto& e : info.entries) {
        const auto& other = coord_->at(e.other);
        if (e.kind == ConflictEntry::Kind::Rear) {
          prog.constraints.push_back(rear_end_constraint(own, {e.lead_x, e.reported.v, t}, e.other,
                                                         gains, lim, e.extra_gain));
          if (const auto obs = estimate(e.other)) {
            const auto x = position_in_frame(own_traj, own.x,
                                             geometry_.trajectory(other.trajectory), obs->x_hat);
            if (x && *x > own.x) {
              const VehicleState est{*x, obs->v_hat, t};
              const auto nominal = rear_end_constraint(own, est, e.other, gains, lim, e.extra_gain);
              if (nominal.barrier >= margin)
                prog.constraints.push_back(robust_constraint(nominal, cfg_.sensor.epsilon, own, est,
                                                             gains, lim, e.extra_gain));
            }
          }
          continue;
        }
        // Behind schedule at the merge point, or closing too fast to fall in
        // behind: be able to stop before it instead.
        const auto merge = merging_constraint(own, e.reported, e.dist_own, e.dist_other, e.other,
                                              e.mp, gains, lim, e.extra_gain);
        const auto ub = merge.upper_bound();
        if (merge.barrier < -1e-6 || (ub && *ub < lim.u_min)) {
          prog.constraints.push_back(yield_constraint(own, e.dist_own, e.other, e.mp, gains, lim));
          continue;
        }
        prog.constraints.push_back(merge);
        if (const auto obs = estimate(e.other)) {
          const double dist_est =
              geometry_.trajectory(other.trajectory).mp_distance(e.mp) - obs->x_hat;
          const VehicleState est{obs->x_hat, obs->v_hat, t};
          const auto nominal = merging_constraint(own, est, e.dist_own, dist_est, e.other, e.mp,
                                                  gains, lim, e.extra_gain);
          if (nominal.barrier >= margin)
            prog.constraints.push_back(robust_constraint(nominal, cfg_.sensor.epsilon, own, est,
                                                         gains, lim, e.extra_gain));
        }
      }
    }

    ReferenceInputs ref_in;
    ref_in.policy = cfg_.reference;
    ref_in.v = own.v;
    ref_in.v_free = v_free;
    ref_in.v_low_override = v_low;
    ref_in.overtaking = info.overtake.has_value();
    ref_in.horizon = cfg_.reference_horizon;
    const auto ref = reference_control(ref_in, lim);
    prog.u_ref = ref.u_ref;
    prog.v_ref = ref.v_ref;
    prog.constraints.push_back(clf_row(own.v, ref.v_ref, gains.c3));

    const auto sol = solve_step(prog);
    if (real) {
      if (!sol.feasible) {
        ++counters_.infeasible_steps;
        if (rescheduled_) ++counters_.infeasible_after_reschedule;
        if (infeasible_streak_.insert(id).second)
          coord_->log({EventKind::Infeasible, t, 0, {id}, {}, {}, sol.diagnostic});
      } else {
        infeasible_streak_.erase(id);
      }
      if (info.overtake) coord_->at(id).overtaking = info.overtake;
    }
    applied_u_[id] = std::clamp(sol.u, lim.u_min, lim.u_max);
  }
}

void Simulation::phase_integrate(double t)
{
  const double ts = cfg_.ts;
  std::map<int, double> old_x;
  for (auto& [id, r] : reals_) {
    const double u = applied_u_.count(id) ? applied_u_.at(id) : 0.0;
    old_x[id] = r.state.x;
    r.cost = accumulate(r.cost, r.state, u, ts, cfg_.fuel);
    r.state = step(r.state, u, ts, cfg_.limits);
    r.u = u;
  }
  for (auto& [id, f] : fakes_) {
    const double u = applied_u_.count(id) ? applied_u_.at(id) : 0.0;
    advance_fake(f, u, ts, cfg_.limits);
  }

  // Safety measured on true states of real CAVs.
  auto record = [&](int a, int b, int kind, double value) {
    if (kind == 0)
      counters_.min_rear_b = std::min(counters_.min_rear_b, value);
    else
      counters_.min_merge_b = std::min(counters_.min_merge_b, value);
    if (value < -kCollisionTol) collided_.insert({std::min(a, b), std::max(a, b), kind});
  };
  trace_rear_b_.clear();
  trace_merge_b_.clear();
  for (const auto& [i, ri] : reals_) {
    const auto& ti = geometry_.trajectory(ri.trajectory);
    double best = kInf;
    int best_id = -1;
    for (const auto& [j, rj] : reals_) {
      if (j == i) continue;
      const auto pos = position_in_frame(ti, ri.state.x, geometry_.trajectory(rj.trajectory), rj.state.x);
      if (pos && *pos >= ri.state.x && *pos < best) {
        best = *pos;
        best_id = j;
      }
    }
    if (best_id < 0) continue;
    const double b = following_barrier(best - ri.state.x, ri.state.v, cfg_.phi, cfg_.delta);
    trace_rear_b_[i] = b;
    record(i, best_id, 0, b);
  }

  struct Crossing
  {
    double overshoot;
    int id;
    int mp;
  };
  std::vector<Crossing> crossings;
  for (const auto& [i, ri] : reals_)
    for (const auto& [mp, s] : geometry_.trajectory(ri.trajectory).mp_sequence)
      if (old_x[i] < s && ri.state.x >= s) crossings.push_back({ri.state.x - s, i, mp});
  std::stable_sort(crossings.begin(), crossings.end(),
                   [](const Crossing& a, const Crossing& b) { return a.overshoot > b.overshoot; });
  for (const auto& c : crossings) {
    const auto it = last_true_crosser_.find(c.mp);
    if (it != last_true_crosser_.end() && it->second != c.id && reals_.count(it->second)) {
      const auto& lead = reals_.at(it->second);
      const double lead_past = lead.state.x - geometry_.trajectory(lead.trajectory).mp_distance(c.mp);
      const double b =
          following_barrier(lead_past - c.overshoot, reals_.at(c.id).state.v, cfg_.phi, cfg_.delta);
      auto& slot = trace_merge_b_.try_emplace(c.id, kInf).first->second;
      slot = std::min(slot, b);
      record(c.id, it->second, 1, b);
    }
    last_true_crosser_[c.mp] = c.id;
  }
  (void)t;
}

void Simulation::write_trace(double t, std::ostream& os)
{
  for (const auto& rec : coord_->queue()) {
    const auto& tr = geometry_.trajectory(rec.trajectory);
    os << fmt(t) << ',' << rec.id << ',' << rec.index << ',';
    if (!rec.fake) {
      const auto& r = reals_.at(rec.id);
      const double u = applied_u_.count(rec.id) ? applied_u_.at(rec.id) : 0.0;
      os << to_string(zone_of(r.state.x, tr, geometry_)) << ',' << fmt(r.state.x) << ','
         << fmt(r.state.v) << ',' << fmt(u) << ',';
    } else {
      os << to_string(zone_of(rec.reported.x, tr, geometry_)) << ",,,,";
    }
    os << fmt(rec.reported.x) << ',' << fmt(rec.reported.v) << ',' << fmt(rec.trust.tau) << ','
       << fmt(rec.trust.R) << ',' << fmt(rec.trust.P) << ',' << to_string(rec.verdict) << ',';
    const auto rb = trace_rear_b_.find(rec.id);
    const auto mb = trace_merge_b_.find(rec.id);
    os << (rb != trace_rear_b_.end() ? fmt(rb->second) : "") << ','
       << (mb != trace_merge_b_.end() ? fmt(mb->second) : "") << '\n';
  }
}

SummaryMetrics Simulation::run(const RunOutputs& out)
{
  if (out.trace) *out.trace << kTraceHeader << '\n';
  const long max_steps = static_cast<long>(std::floor(cfg_.max_time / cfg_.ts + kTimeEps));
  long k = 0;
  double t = 0.0;
  for (; k <= max_steps; ++k) {
    t = static_cast<double>(k) * cfg_.ts;
    phase_events(t);
    const bool pending = next_arrival_ < schedule_.size() ||
                         attacker_state_.next_spawn < attacker_.spawns.size() ||
                         !attacker_state_.deferred.empty() ||
                         std::any_of(waiting_.begin(), waiting_.end(),
                                     [](const auto& w) { return !w.second.empty(); });
    if (coord_->size() == 0 && !pending) break;
    phase_reports(t);
    phase_trust(t);
    phase_detection(t);
    phase_reschedule(t);
    phase_control(t);
    if (out.trace) write_trace(t, *out.trace);
    phase_integrate(t);
  }

  counters_.steps = k;
  counters_.sim_time = t;
  counters_.collisions = static_cast<int>(collided_.size());
  counters_.unfinished_real = static_cast<int>(reals_.size());
  for (const auto& [lane, fifo] : waiting_) counters_.unfinished_real += static_cast<int>(fifo.size());
  counters_.unfinished_real += static_cast<int>(schedule_.size() - next_arrival_);
  counters_.reschedules_trust = counters_.reschedules_lane = counters_.reschedules_mitigation = 0;
  counters_.overtake_swaps = 0;
  for (const auto& e : coord_->events()) {
    switch (e.kind) {
      case EventKind::RescheduleTrust: ++counters_.reschedules_trust; break;
      case EventKind::RescheduleLane: ++counters_.reschedules_lane; break;
      case EventKind::RescheduleMitigation: ++counters_.reschedules_mitigation; break;
      case EventKind::OvertakeSwap: ++counters_.overtake_swaps; break;
      default: break;
    }
  }
  if (out.events) {
    for (const auto& e : coord_->events()) {
      nlohmann::ordered_json j;
      j["seq"] = e.seq;
      j["t"] = e.time;
      j["kind"] = to_string(e.kind);
      j["ids"] = e.ids;
      if (!e.old_index.empty()) {
        nlohmann::ordered_json o, n;
        for (const auto& [id, idx] : e.old_index) o[std::to_string(id)] = idx;
        for (const auto& [id, idx] : e.new_index) n[std::to_string(id)] = idx;
        j["old_index"] = o;
        j["new_index"] = n;
      }
      if (!e.note.empty()) j["note"] = e.note;
      *out.events << j.dump() << '\n';
    }
  }
  return summarize(completed_, counters_);
}

std::vector<SweepRow> sweep(const ScenarioConfig& base, const std::string& axis,
                            const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds)
{
  if (axis != "fake_fraction" && axis != "uncooperative")
    throw ConfigError("sweep: axis must be fake_fraction or uncooperative, got '" + axis + "'");
  std::vector<SweepRow> rows;
  for (double value : values) {
    for (auto seed : seeds) {
      ScenarioConfig cfg = base;
      cfg.seed = seed;
      if (axis == "fake_fraction") {
        if (value < 0.0 || value > 1.0)
          throw ConfigError("sweep: fake_fraction values must lie in [0, 1]");
        cfg.attacker.enabled = cfg.attacker.enabled || value > 0.0;
        cfg.attacker.fraction = value;
      } else {
        if (value < 0.0 || value != std::floor(value))
          throw ConfigError("sweep: uncooperative values must be non-negative integers");
        cfg.uncooperative.count = static_cast<int>(value);
      }
      Simulation sim(cfg);
      rows.push_back({axis, value, seed, sim.run()});
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& os)
{
  os << "axis,value,seed,real_count,fake_count,completed_real,avg_travel_time,avg_energy,"
        "avg_fuel,collisions,min_rear_b,min_merge_b,infeasible_steps,"
        "infeasible_after_reschedule,reschedules_trust,reschedules_lane,"
        "reschedules_mitigation,detected_fakes,false_positives\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    os << r.axis << ',' << fmt(r.value) << ',' << r.seed << ',' << m.real_count << ','
       << m.fake_count << ',' << m.completed_real << ',' << opt(m.avg_travel_time) << ','
       << opt(m.avg_energy) << ',' << opt(m.avg_fuel) << ',' << m.collisions << ','
       << fmt(m.min_rear_b) << ',' << fmt(m.min_merge_b) << ',' << m.infeasible_steps << ','
       << m.infeasible_after_reschedule << ',' << m.reschedules_trust << ','
       << m.reschedules_lane << ',' << m.reschedules_mitigation << ','
       << m.detected_fakes << ',' << m.false_positives << '\n';
  }
}

}  // namespace cavsim
