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

#include "cavsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace cavsim {

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 rotate(Vec2 p, int quarter_turns)
{
  for (int i = 0; i < quarter_turns; ++i) p = {-p.y, p.x};
  return p;
}

double wrap_positive(double a)
{
  a = std::fmod(a, 2.0 * kPi);
  return a < 0.0 ? a + 2.0 * kPi : a;
}

PathSegment make_line(Vec2 start, Vec2 direction, double length)
{
  PathSegment seg;
  seg.kind = PathSegment::Kind::Line;
  seg.start = start;
  seg.direction = direction;
  seg.length = length;
  return seg;
}

PathSegment make_arc(Vec2 center, double radius, double start_angle, double turn)
{
  PathSegment seg;
  seg.kind = PathSegment::Kind::Arc;
  seg.center = center;
  seg.radius = radius;
  seg.start_angle = start_angle;
  seg.turn = turn;
  seg.length = radius * kPi / 2.0;
  seg.start = seg.point_at(0.0);
  return seg;
}

PathSegment rotate_segment(const PathSegment& seg, int k)
{
  if (seg.kind == PathSegment::Kind::Line)
    return make_line(rotate(seg.start, k), rotate(seg.direction, k), seg.length);
  return make_arc(rotate(seg.center, k), seg.radius, seg.start_angle + k * kPi / 2.0, seg.turn);
}

// Arc-length parameter of a point known to lie on the circle, if it falls on
// the arc.
std::optional<double> arc_param(const PathSegment& arc, Vec2 p, double tol)
{
  const double theta = std::atan2(p.y - arc.center.y, p.x - arc.center.x);
  const double swept = wrap_positive(arc.turn * (theta - arc.start_angle));
  double s = swept * arc.radius;
  if (s > 2.0 * kPi * arc.radius - tol) s -= 2.0 * kPi * arc.radius;
  if (s < -tol || s > arc.length + tol) return std::nullopt;
  return std::clamp(s, 0.0, arc.length);
}

std::optional<double> line_param(const PathSegment& line, Vec2 p, double tol)
{
  const Vec2 d = p - line.start;
  const double s = d.x * line.direction.x + d.y * line.direction.y;
  const double off = d.x * line.direction.y - d.y * line.direction.x;
  if (std::abs(off) > tol || s < -tol || s > line.length + tol) return std::nullopt;
  return std::clamp(s, 0.0, line.length);
}

std::optional<double> param_on(const PathSegment& seg, Vec2 p, double tol)
{
  return seg.kind == PathSegment::Kind::Line ? line_param(seg, p, tol) : arc_param(seg, p, tol);
}

// Candidate intersection points of the supporting curves.
std::vector<Vec2> curve_intersections(const PathSegment& a, const PathSegment& b)
{
  std::vector<Vec2> out;
  using K = PathSegment::Kind;
  if (a.kind == K::Line && b.kind == K::Line) {
    const double den = a.direction.x * b.direction.y - a.direction.y * b.direction.x;
    if (std::abs(den) < 1e-12) return out;
    const Vec2 d = b.start - a.start;
    const double s = (d.x * b.direction.y - d.y * b.direction.x) / den;
    out.push_back(a.start + s * a.direction);
    return out;
  }
  if (a.kind == K::Arc && b.kind == K::Line) return curve_intersections(b, a);
  if (a.kind == K::Line) {
    // |start + s dir - c|^2 = r^2
    const Vec2 f = a.start - b.center;
    const double bq = f.x * a.direction.x + f.y * a.direction.y;
    const double cq = f.x * f.x + f.y * f.y - b.radius * b.radius;
    double disc = bq * bq - cq;
    if (disc < -1e-9 * b.radius * b.radius) return out;
    disc = std::sqrt(std::max(0.0, disc));
    out.push_back(a.start + (-bq - disc) * a.direction);
    if (disc > 0.0) out.push_back(a.start + (-bq + disc) * a.direction);
    return out;
  }
  const Vec2 d = b.center - a.center;
  const double dist = norm(d);
  if (dist < 1e-12 || dist > a.radius + b.radius || dist < std::abs(a.radius - b.radius)) return out;
  const double along = (a.radius * a.radius - b.radius * b.radius + dist * dist) / (2.0 * dist);
  const double h = std::sqrt(std::max(0.0, a.radius * a.radius - along * along));
  const Vec2 mid = a.center + (along / dist) * d;
  const Vec2 perp{-d.y / dist, d.x / dist};
  out.push_back(mid + h * perp);
  if (h > 0.0) out.push_back(mid - h * perp);
  return out;
}

}  // namespace

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

std::string to_string(Movement m)
{
  switch (m) {
    case Movement::Straight: return "straight";
    case Movement::Left: return "left";
    case Movement::Right: return "right";
  }
  return "?";
}

std::string to_string(Zone z)
{
  switch (z) {
    case Zone::ReschedulingZone: return "rescheduling";
    case Zone::Approach: return "approach";
    case Zone::IntersectionBox: return "box";
    case Zone::Exited: return "exited";
  }
  return "?";
}

Vec2 PathSegment::point_at(double s) const
{
  if (kind == Kind::Line) return start + s * direction;
  const double a = start_angle + turn * s / radius;
  return {center.x + radius * std::cos(a), center.y + radius * std::sin(a)};
}

double PathSegment::heading_at(double s) const
{
  if (kind == Kind::Line) return std::atan2(direction.y, direction.x);
  return start_angle + turn * s / radius + turn * kPi / 2.0;
}

Pose Trajectory::pose_at(double s) const
{
  s = std::max(0.0, s);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (s <= seg.length || i + 1 == segments.size()) {
      // Past the end of the exit run the path keeps going straight.
      return {seg.point_at(s), seg.heading_at(std::min(s, seg.length))};
    }
    s -= seg.length;
  }
  return {};
}

double Trajectory::mp_distance(int mp_id) const
{
  for (const auto& [id, dist] : mp_sequence)
    if (id == mp_id) return dist;
  return -1.0;
}

const Trajectory& IntersectionGeometry::trajectory(int id) const
{
  if (id < 1 || id > static_cast<int>(trajectories_.size()))
    throw std::out_of_range("unknown trajectory id " + std::to_string(id));
  return trajectories_[static_cast<std::size_t>(id - 1)];
}

const Trajectory& IntersectionGeometry::trajectory(int entry_lane, Movement movement) const
{
  auto it = by_lane_.find({entry_lane, movement});
  if (it == by_lane_.end())
    throw std::out_of_range("lane l" + std::to_string(entry_lane) + " does not admit " +
                            to_string(movement));
  return trajectory(it->second);
}

bool IntersectionGeometry::has_trajectory(int entry_lane, Movement movement) const
{
  return by_lane_.count({entry_lane, movement}) != 0;
}

IntersectionGeometry build_intersection(const GeometryParams& params)
{
  if (!(params.approach_length > 0.0))
    throw std::invalid_argument("geometry: approach_length L must be > 0");
  if (!(params.rescheduling_length > 0.0))
    throw std::invalid_argument("geometry: rescheduling_length L1 must be > 0");
  if (!(params.rescheduling_length < params.approach_length))
    throw std::invalid_argument("geometry: rescheduling_length L1 must be < approach_length L");
  if (!(params.half_width > 0.0))
    throw std::invalid_argument("geometry: half_width must be > 0");
  if (!(params.exit_length > 0.0))
    throw std::invalid_argument("geometry: exit_length must be > 0");

  IntersectionGeometry geo;
  geo.params_ = params;
  const double w = params.half_width;
  const double L = params.approach_length;
  const double inner = w / 4.0;
  const double outer = 3.0 * w / 4.0;

  for (int k = 0; k < 4; ++k) {
    geo.lanes_.push_back({2 * k + 1, 2 * k + 1, k, true});
    geo.lanes_.push_back({2 * k + 2, 2 * k + 2, k, false});
  }

  // Box paths for the approach from the south (heading north); the other
  // three approaches are quarter-turn rotations of these.
  struct BasePath
  {
    bool inner_lane;
    Movement movement;
    PathSegment box;
    int exit_side;  // side of the box the path leaves through, before rotation
    bool exit_inner;
  };
  const std::vector<BasePath> base = {
      {true, Movement::Straight, make_line({inner, -w}, {0.0, 1.0}, 2.0 * w), 2, true},
      {true, Movement::Left, make_arc({-w, -w}, w + inner, 0.0, 1.0), 3, true},
      {false, Movement::Straight, make_line({outer, -w}, {0.0, 1.0}, 2.0 * w), 2, false},
      {false, Movement::Right, make_arc({w, -w}, w - outer, kPi, -1.0), 1, false},
  };

  for (int k = 0; k < 4; ++k) {
    for (const auto& bp : base) {
      Trajectory traj;
      traj.id = static_cast<int>(geo.trajectories_.size()) + 1;
      traj.entry_lane = 2 * k + (bp.inner_lane ? 1 : 2);
      traj.movement = bp.movement;
      const int side = (bp.exit_side + k) % 4;
      traj.exit_lane = 2 * side + (bp.exit_inner ? 1 : 2);
      const PathSegment box = rotate_segment(bp.box, k);
      const Vec2 heading_in = rotate({0.0, 1.0}, k);
      const Vec2 origin = box.start - L * heading_in;
      const Vec2 box_end = box.point_at(box.length);
      const double h_out = box.heading_at(box.length);
      traj.segments = {make_line(origin, heading_in, L), box,
                       make_line(box_end, {std::cos(h_out), std::sin(h_out)}, params.exit_length)};
      // Snap unit directions so quarter-turn headings stay exact.
      for (auto& seg : traj.segments) {
        if (seg.kind == PathSegment::Kind::Line) {
          seg.direction.x = std::round(seg.direction.x * 1e12) / 1e12;
          seg.direction.y = std::round(seg.direction.y * 1e12) / 1e12;
        }
      }
      traj.box_entry = L;
      traj.box_exit = L + box.length;
      traj.total_length = traj.box_exit + params.exit_length;
      geo.by_lane_[{traj.entry_lane, traj.movement}] = traj.id;
      geo.trajectories_.push_back(std::move(traj));
    }
  }

  // Conflict points: pairwise intersections of the in-box paths. Paths that
  // leave the same entry lane share their start point; that is a diverge,
  // not a conflict.
  const double tol = 1e-7 * w;
  struct Hit
  {
    Vec2 p;
    std::size_t a, b;
    double sa, sb;
  };
  std::vector<Hit> hits;
  auto& trajs = geo.trajectories_;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    for (std::size_t j = i + 1; j < trajs.size(); ++j) {
      const auto& sa = trajs[i].segments[1];
      const auto& sb = trajs[j].segments[1];
      const bool shared_start = norm(sa.start - sb.start) < tol;
      for (Vec2 p : curve_intersections(sa, sb)) {
        auto pa = param_on(sa, p, 1e-6 * w);
        auto pb = param_on(sb, p, 1e-6 * w);
        if (!pa || !pb) continue;
        if (shared_start && norm(p - sa.start) < 1e-6 * w) continue;
        hits.push_back({p, i, j, *pa, *pb});
      }
    }
  }

  std::vector<Vec2> points;
  auto find_point = [&](Vec2 p) -> std::size_t {
    for (std::size_t n = 0; n < points.size(); ++n)
      if (norm(points[n] - p) < 1e-5 * w) return n;
    points.push_back(p);
    return points.size() - 1;
  };
  std::vector<std::size_t> hit_point;
  for (const auto& h : hits) hit_point.push_back(find_point(h.p));

  // Number in reading order: top row first, left to right.
  std::vector<std::size_t> order(points.size());
  for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
  const double row_tol = 1e-4 * w;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    if (std::abs(points[l].y - points[r].y) > row_tol) return points[l].y > points[r].y;
    return points[l].x < points[r].x;
  });
  std::vector<int> label(points.size());
  for (std::size_t n = 0; n < order.size(); ++n) {
    label[order[n]] = static_cast<int>(n) + 1;
    geo.merge_points_.push_back({static_cast<int>(n) + 1, points[order[n]]});
  }

  for (std::size_t n = 0; n < hits.size(); ++n) {
    const auto& h = hits[n];
    const int id = label[hit_point[n]];
    for (auto [t, s] : {std::pair{h.a, h.sa}, std::pair{h.b, h.sb}}) {
      auto& traj = trajs[t];
      if (!traj.contains_mp(id)) traj.mp_sequence.emplace_back(id, L + s);
    }
  }
  for (auto& traj : trajs) {
    std::sort(traj.mp_sequence.begin(), traj.mp_sequence.end(),
              [](const auto& l, const auto& r) { return l.second < r.second; });
  }
  return geo;
}

std::vector<int> conflict_points(const Trajectory& a, const Trajectory& b)
{
  std::vector<int> out;
  for (const auto& [id, dist] : a.mp_sequence)
    if (b.contains_mp(id)) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

Zone zone_of(double x, const Trajectory& trajectory, const IntersectionGeometry& geometry)
{
  if (x < geometry.rescheduling_length()) return Zone::ReschedulingZone;
  if (x < geometry.approach_length()) return Zone::Approach;
  if (x < trajectory.total_length) return Zone::IntersectionBox;
  return Zone::Exited;
}

std::optional<double> position_in_frame(const Trajectory& ti, double xi, const Trajectory& tj,
                                        double xj)
{
  if (ti.id == tj.id) return xj;
  if (ti.entry_lane == tj.entry_lane && xi < ti.box_entry && xj < tj.box_entry) return xj;
  if (ti.exit_lane == tj.exit_lane && xi >= ti.box_exit && xj >= tj.box_exit)
    return xj - tj.box_exit + ti.box_exit;
  return std::nullopt;
}

}  // namespace cavsim
