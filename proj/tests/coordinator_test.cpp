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

#include <gtest/gtest.h>

#include "cavsim/coordinator.hpp"

namespace cavsim {
namespace {

class CoordinatorTest : public ::testing::Test
{
protected:
  CoordinatorTest() : geo_(build_intersection(wide())), coord_(geo_, instant()) {}

  // Uncooperative membership straight from the current reports.
  static CoordinatorParams instant()
  {
    CoordinatorParams p;
    p.slow_dwell = 0.0;
    return p;
  }

  static GeometryParams wide()
  {
    GeometryParams g;
    g.half_width = 15.0;
    return g;
  }

  int add(int lane, Movement m, double x, double v = 10.0, double tau = 0.95)
  {
    CavRecord r;
    r.id = next_++;
    r.entry_lane = lane;
    r.trajectory = geo_.trajectory(lane, m).id;
    r.has_report = true;
    r.reported = {x, v, 0.0};
    r.trust.tau = tau;
    r.tau_prev = tau;
    coord_.on_arrival(r, 0.0);
    return r.id;
  }

  int shared_mp(int lane_a, Movement ma, int lane_b, Movement mb) const
  {
    const auto mps = conflict_points(geo_.trajectory(lane_a, ma), geo_.trajectory(lane_b, mb));
    return mps.empty() ? -1 : mps.front();
  }

  IntersectionGeometry geo_;
  Coordinator coord_;
  int next_ = 1;
};

TEST_F(CoordinatorTest, ArrivalsAppendAndDeparturesCompact)
{
  for (int n = 0; n < 5; ++n) EXPECT_EQ(add(1, Movement::Straight, 200.0 - 30.0 * n), n + 1);
  EXPECT_EQ(coord_.at(3).index, 3);
  coord_.on_departure(3, 1.0);
  EXPECT_EQ(coord_.size(), 4u);
  EXPECT_EQ(coord_.at(4).index, 3);
  EXPECT_EQ(coord_.at(5).index, 4);
  EXPECT_THROW(coord_.on_departure(3, 1.0), std::out_of_range);
  CavRecord dup;
  dup.id = 1;
  dup.trajectory = 1;
  EXPECT_THROW(coord_.on_arrival(dup, 2.0), std::invalid_argument);
  for (int id : {1, 2, 4, 5}) coord_.on_departure(id, 3.0);
  EXPECT_EQ(coord_.size(), 0u);
  EXPECT_EQ(coord_.events().back().kind, EventKind::Departure);
}

TEST_F(CoordinatorTest, TrustSearchWalksPastUntrustedPredecessors)
{
  const int c1 = add(1, Movement::Straight, 120.0, 10.0, 0.95);
  add(3, Movement::Straight, 100.0, 10.0, 0.95);
  const int c3 = add(1, Movement::Straight, 90.0, 10.0, 0.2);
  const int c4 = add(1, Movement::Straight, 60.0, 10.0, 0.95);
  EXPECT_EQ(coord_.default_search(c4).rear, (std::vector<int>{c3}));
  EXPECT_EQ(coord_.trust_based_search(c4, 0.1).rear, (std::vector<int>{c3, c1}));
  coord_.at(c3).trust.tau = 0.95;
  EXPECT_EQ(coord_.trust_based_search(c4, 0.1).rear, coord_.default_search(c4).rear);
  EXPECT_TRUE(coord_.default_search(c1).rear.empty());
  EXPECT_TRUE(coord_.default_search(c1).merge.empty());
}

TEST_F(CoordinatorTest, MergeSearchPrefixStopsAtTheFirstTrustedCav)
{
  const int mp = shared_mp(1, Movement::Straight, 3, Movement::Straight);
  ASSERT_GT(mp, 0);
  add(2, Movement::Right, 150.0, 10.0, 0.95);  // does not use the merge point
  std::vector<int> ids;
  for (int n = 0; n < 4; ++n)
    ids.push_back(add(n % 2 == 0 ? 1 : 3, Movement::Straight, 140.0 - 20.0 * n, 10.0, 0.05));
  const int c6 = add(3, Movement::Straight, 40.0);
  EXPECT_EQ(coord_.default_search(c6).merge.at(mp), (std::vector<int>{ids[3]}));
  EXPECT_EQ(coord_.trust_based_search(c6, 0.1).merge.at(mp),
            (std::vector<int>{ids[3], ids[2], ids[1], ids[0]}));
  coord_.at(ids[1]).trust.tau = 0.95;
  EXPECT_EQ(coord_.trust_based_search(c6, 0.1).merge.at(mp),
            (std::vector<int>{ids[3], ids[2], ids[1]}));
}

TEST_F(CoordinatorTest, PassedMergePointsAreSkipped)
{
  const int mp = shared_mp(1, Movement::Straight, 3, Movement::Straight);
  const double s = geo_.trajectory(3, Movement::Straight).mp_distance(mp);
  add(1, Movement::Straight, 250.0);
  const int late = add(3, Movement::Straight, s + 1.0);
  EXPECT_EQ(coord_.default_search(late).merge.count(mp), 0u);
}

TEST_F(CoordinatorTest, TrustTriggerCountsLowTrustInsideTheZone)
{
  for (int n = 0; n < 10; ++n) add(2 * (n % 4) + 1, Movement::Straight, 200.0 - 15.0 * n);
  EXPECT_FALSE(coord_.trust_reschedule_trigger());
  coord_.at(3).trust.tau = 0.05;
  coord_.at(7).trust.tau = 0.02;
  const auto p = coord_.trust_reschedule_trigger();
  ASSERT_TRUE(p);
  EXPECT_EQ(p->k_min, 3);
  EXPECT_NEAR(p->weights.front(), 0.95, 1e-12);
  // Rising trust is not a trigger.
  coord_.at(3).tau_prev = 0.01;
  coord_.at(7).tau_prev = 0.01;
  EXPECT_FALSE(coord_.trust_reschedule_trigger());
}

TEST_F(CoordinatorTest, TrustTriggerIgnoresCavsPastTheReschedulingZone)
{
  add(1, Movement::Straight, 250.0, 10.0, 0.01);
  add(3, Movement::Straight, 100.0);
  EXPECT_FALSE(coord_.trust_reschedule_trigger());
}

TEST(CoordinatorLanes, PrioritiesFromSlowCounts)
{
  GeometryParams g;
  g.half_width = 15.0;
  const auto geo = build_intersection(g);
  ASSERT_TRUE(conflict_points(geo.trajectory(8, Movement::Right), geo.trajectory(5, Movement::Straight))
                  .empty());
  CoordinatorParams params;
  params.lane_c = 0.0;
  Coordinator c(geo, params);
  int id = 1;
  auto add = [&](int lane, Movement m, double x, double v) {
    CavRecord r;
    r.id = id++;
    r.entry_lane = lane;
    r.trajectory = geo.trajectory(lane, m).id;
    r.reported = {x, v, 0.0};
    r.trust.tau = 0.95;
    c.on_arrival(r, 0.0);
  };
  for (int n = 0; n < 3; ++n) add(8, Movement::Right, 150.0 - 30.0 * n, 2.0);
  for (int n = 0; n < 2; ++n) add(5, Movement::Straight, 150.0 - 30.0 * n, 2.0);
  add(1, Movement::Straight, 10.0, 14.0);
  c.update_slow_timers(0.0);
  EXPECT_TRUE(c.uncooperative_set().empty());
  c.update_slow_timers(params.slow_dwell);
  const auto zeta = c.lane_priorities();
  EXPECT_DOUBLE_EQ(zeta.at(8), 0.4);
  EXPECT_DOUBLE_EQ(zeta.at(5), 0.6);
  EXPECT_DOUBLE_EQ(zeta.at(1), 1.0);
}

TEST_F(CoordinatorTest, SlowTimersNeedAnUnbrokenRun)
{
  CoordinatorParams params;
  params.slow_dwell = 1.0;
  Coordinator c(geo_, params);
  CavRecord r;
  r.id = 1;
  r.entry_lane = 2;
  r.trajectory = geo_.trajectory(2, Movement::Straight).id;
  r.reported = {100.0, 2.0, 0.0};
  c.on_arrival(r, 0.0);
  c.update_slow_timers(0.0);
  c.update_slow_timers(0.95);
  EXPECT_TRUE(c.uncooperative_set().empty());
  // Speeding up clears the timer.
  c.at(1).reported.v = 5.0;
  c.update_slow_timers(1.0);
  c.at(1).reported.v = 2.0;
  c.update_slow_timers(1.5);
  c.update_slow_timers(2.45);
  EXPECT_TRUE(c.uncooperative_set().empty());
  c.update_slow_timers(2.5);
  EXPECT_EQ(c.uncooperative_set(), (std::vector<int>{1}));
  EXPECT_FALSE(c.lane_priorities().empty());
}

TEST(CoordinatorLanes, NoSlowCavsGiveFullPriorityEvenWithoutSmoothing)
{
  GeometryParams g;
  g.half_width = 15.0;
  const auto geo = build_intersection(g);
  CoordinatorParams params;
  params.lane_c = 0.0;
  Coordinator c(geo, params);
  for (const auto& [lane, zeta] : c.lane_priorities()) EXPECT_EQ(zeta, 1.0) << lane;
}

TEST_F(CoordinatorTest, NoSlowCavsMeansNoLaneTrigger)
{
  add(1, Movement::Straight, 100.0, 12.0);
  add(3, Movement::Straight, 80.0, 12.0);
  EXPECT_TRUE(coord_.uncooperative_set().empty());
  for (const auto& [lane, z] : coord_.lane_priorities()) EXPECT_EQ(z, 1.0);
  EXPECT_FALSE(coord_.lane_reschedule_trigger());
}

TEST_F(CoordinatorTest, SlowBecauseOfASlowMergePredecessorIsNotUncooperative)
{
  const int slow = add(1, Movement::Straight, 150.0, 2.0);
  const int blocked = add(3, Movement::Straight, 140.0, 2.0);
  ASSERT_GT(shared_mp(1, Movement::Straight, 3, Movement::Straight), 0);
  EXPECT_EQ(coord_.uncooperative_set(), (std::vector<int>{slow}));
  (void)blocked;
}

TEST_F(CoordinatorTest, LaneTriggerMovesFreeCavsAheadOfTheSlowOne)
{
  const int slow = add(2, Movement::Right, 50.0, 2.0);
  const int a = add(1, Movement::Straight, 30.0, 14.0);
  const int b = add(3, Movement::Straight, 20.0, 14.0);
  const auto p = coord_.lane_reschedule_trigger();
  ASSERT_TRUE(p);
  const auto r = solve_schedule(*p);
  ASSERT_TRUE(coord_.apply_schedule(r, EventKind::RescheduleLane, 1.0));
  EXPECT_EQ(coord_.at(slow).index, 3);
  EXPECT_EQ(coord_.at(a).index, 1);
  EXPECT_EQ(coord_.at(b).index, 2);
  EXPECT_EQ(coord_.events().back().kind, EventKind::RescheduleLane);
}

TEST_F(CoordinatorTest, OnlyTheLatestCrosserOfAMergePointCounts)
{
  const int mp = shared_mp(8, Movement::Straight, 5, Movement::Straight);
  ASSERT_GE(mp, 0);
  const double at_a = geo_.trajectory(8, Movement::Straight).mp_distance(mp);
  const double at_b = geo_.trajectory(5, Movement::Straight).mp_distance(mp);
  const int a = add(8, Movement::Straight, at_a + 1.0, 2.5);
  const int b = add(5, Movement::Straight, at_b - 40.0, 14.0);
  const int c = add(5, Movement::Straight, at_b - 80.0, 14.0);
  coord_.update_crossings();
  EXPECT_EQ(coord_.last_crosser(mp), a);
  EXPECT_EQ(coord_.merge_predecessors(c, mp), (std::vector<int>{b, a}));
  // b crosses after a, which is no longer the one c has to follow.
  coord_.at(b).reported.x = at_b + 30.0;
  coord_.update_crossings();
  EXPECT_EQ(coord_.last_crosser(mp), b);
  EXPECT_EQ(coord_.merge_predecessors(c, mp), (std::vector<int>{b}));
  // Nor does a come back once b has left.
  coord_.on_departure(b, 1.0);
  EXPECT_TRUE(coord_.merge_predecessors(c, mp).empty());
  EXPECT_EQ(coord_.last_crosser(mp), b);
}

TEST_F(CoordinatorTest, CavsPastTheReschedulingZoneKeepTheirIndex)
{
  // Behind a pinned CAV the flagged one may still drop back.
  const int pinned = add(1, Movement::Straight, 230.0);
  const int f = add(2, Movement::Right, 100.0);
  const int free = add(1, Movement::Straight, 60.0);
  coord_.at(f).detected_fake = true;
  ASSERT_TRUE(coord_.mitigation_reschedule(1.0));
  EXPECT_EQ(coord_.at(pinned).index, 1);
  EXPECT_EQ(coord_.at(free).index, 2);
  EXPECT_EQ(coord_.at(f).index, 3);
}

TEST_F(CoordinatorTest, NobodyCrossesAPinnedCavInTheOrder)
{
  // Ahead of a pinned CAV it may not: the pinned CAV would gain a new
  // predecessor with too little room left to brake.
  const int f = add(2, Movement::Right, 100.0);
  const int pinned = add(1, Movement::Straight, 230.0);
  const int free = add(1, Movement::Straight, 60.0);
  coord_.at(f).detected_fake = true;
  const auto p = coord_.mitigation_problem({f});
  ASSERT_EQ(p.ids, (std::vector<int>{f, pinned, free}));
  EXPECT_FALSE(coord_.mitigation_reschedule(1.0));
  EXPECT_EQ(coord_.at(f).index, 1);
  EXPECT_EQ(coord_.at(pinned).index, 2);
  EXPECT_EQ(coord_.at(free).index, 3);
}

TEST_F(CoordinatorTest, MitigationPushesTheFlaggedCavToTheBack)
{
  add(1, Movement::Straight, 200.0);
  add(1, Movement::Straight, 150.0);
  const int f = add(2, Movement::Right, 120.0);
  add(1, Movement::Straight, 100.0);
  add(1, Movement::Straight, 50.0);
  coord_.at(f).detected_fake = true;
  ASSERT_TRUE(coord_.mitigation_reschedule(2.0));
  EXPECT_EQ(coord_.at(f).index, 5);
  EXPECT_EQ(coord_.at(4).index, 3);
  EXPECT_EQ(coord_.at(5).index, 4);
  EXPECT_EQ(coord_.events().back().kind, EventKind::RescheduleMitigation);
  // Repeating it changes nothing and logs nothing.
  const auto n = coord_.events().size();
  EXPECT_FALSE(coord_.mitigation_reschedule(3.0));
  EXPECT_EQ(coord_.events().size(), n);
}

TEST_F(CoordinatorTest, MitigationLetsFollowersPassAFlaggedLeader)
{
  const int f = add(1, Movement::Straight, 120.0, 4.0);
  const int a = add(1, Movement::Straight, 80.0);
  coord_.at(f).detected_fake = true;
  const auto p = coord_.mitigation_problem({f});
  EXPECT_TRUE(p.precedence.empty());
  ASSERT_TRUE(coord_.mitigation_reschedule(1.0));
  EXPECT_EQ(coord_.at(a).index, 1);
  // The follower still reacts to the flagged leader once it is behind in the
  // order: a visible one keeps its row, an invisible one in range is passed.
  SensingView seen{[](int) { return true; }, [](int) { return true; }};
  auto info = coord_.conflict_info_for(a, coord_.trust_based_search(a, 0.1), true, seen);
  ASSERT_FALSE(info.entries.empty());
  EXPECT_EQ(info.entries[0].kind, ConflictEntry::Kind::Rear);
  EXPECT_EQ(info.entries[0].other, f);
  EXPECT_FALSE(info.overtake);
  SensingView unseen{[](int) { return true; }, [](int) { return false; }};
  info = coord_.conflict_info_for(a, coord_.trust_based_search(a, 0.1), true, unseen);
  EXPECT_TRUE(info.entries.empty());
  EXPECT_EQ(info.overtake, f);
}

TEST_F(CoordinatorTest, FlaggedRowTreatment)
{
  const int f = add(1, Movement::Straight, 120.0, 4.0, 0.0);
  const int a = add(1, Movement::Straight, 80.0);
  coord_.at(f).detected_fake = true;
  const auto search = coord_.trust_based_search(a, 0.1);
  // Same-lane leaders also appear at every shared merge point.
  const auto n_rows = 1 + search.merge.size();
  SensingView out_of_range{[](int) { return false; }, [](int) { return false; }};
  auto info = coord_.conflict_info_for(a, search, true, out_of_range);
  ASSERT_EQ(info.entries.size(), n_rows);
  for (const auto& e : info.entries) EXPECT_EQ(e.extra_gain, coord_.params().rho);
  SensingView hidden{[](int) { return true; }, [](int) { return false; }};
  info = coord_.conflict_info_for(a, search, true, hidden);
  EXPECT_TRUE(info.entries.empty());
  EXPECT_EQ(info.dropped, (std::vector<int>{f}));
  EXPECT_EQ(info.overtake, f);
  // Without mitigation nothing is dropped.
  info = coord_.conflict_info_for(a, search, false, hidden);
  ASSERT_EQ(info.entries.size(), n_rows);
  EXPECT_EQ(info.entries[0].kind, ConflictEntry::Kind::Rear);
  EXPECT_EQ(info.entries[0].extra_gain, 0.0);
  EXPECT_DOUBLE_EQ(info.entries[0].lead_x, 120.0);
}

TEST_F(CoordinatorTest, SwapExchangesIndices)
{
  const int a = add(1, Movement::Straight, 100.0);
  const int b = add(1, Movement::Straight, 90.0);
  coord_.swap_indices(b, a, 1.0);
  EXPECT_EQ(coord_.at(a).index, 2);
  EXPECT_EQ(coord_.at(b).index, 1);
  EXPECT_EQ(coord_.at_index(1).id, b);
  EXPECT_EQ(coord_.events().back().kind, EventKind::OvertakeSwap);
}

TEST(Overtake, CompletionTest)
{
  EXPECT_TRUE(overtake_complete(120.0, 100.0, 5.0, 1.8, 3.78));
  EXPECT_FALSE(overtake_complete(100.0, 100.0, 5.0, 1.8, 3.78));
  // Exactly on the boundary counts as complete.
  EXPECT_TRUE(overtake_complete(100.0 + 0.5 * 1.8 + 3.75, 100.0, 0.5, 1.8, 3.75));
}

}  // namespace
}  // namespace cavsim
