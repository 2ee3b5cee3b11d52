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

#ifndef CAVSIM_GEOMETRY_HPP_
#define CAVSIM_GEOMETRY_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cavsim {

struct Vec2
{
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double norm(Vec2 a);

enum class Movement { Straight, Left, Right };
std::string to_string(Movement m);

/// Position of a CAV along its own trajectory, split by where coordination
/// rules apply. Intervals are half-open.
enum class Zone { ReschedulingZone, Approach, IntersectionBox, Exited };
std::string to_string(Zone z);

struct GeometryParams
{
  double approach_length = 300.0;      // L
  double rescheduling_length = 219.0;  // L1
  double half_width = 2.7386127875258306;  // sqrt(30)/2
  // Long enough that a departing CAV is already clear of any follower's
  // safe-merge distance at the last merge point.
  double exit_length = 60.0;
};

/// One piece of a planar path: a straight run or a circular arc.
struct PathSegment
{
  enum class Kind { Line, Arc } kind = Kind::Line;
  // Line: start + s * direction. Arc: center, radius, start angle, signed
  // angular direction (+1 counter-clockwise, -1 clockwise).
  Vec2 start;
  Vec2 direction;
  Vec2 center;
  double radius = 0.0;
  double start_angle = 0.0;
  double turn = 1.0;
  double length = 0.0;

  Vec2 point_at(double s) const;
  double heading_at(double s) const;
};

struct Pose
{
  Vec2 position;
  double heading = 0.0;
};

struct LaneInfo
{
  int id = 0;        // 1..8 (l1..l8)
  int entry = 0;     // 1..8 (o1..o8)
  int approach = 0;  // 0..3, which side of the box the lane comes from
  bool leftmost = false;
};

struct MergePoint
{
  int id = 0;  // 1-based, printed as M<id>
  Vec2 position;
};

struct Trajectory
{
  int id = 0;
  int entry_lane = 0;  // 1..8
  Movement movement = Movement::Straight;
  int exit_lane = 0;   // 1..8 numbering of outgoing lanes
  double total_length = 0.0;
  double box_entry = 0.0;  // == L
  double box_exit = 0.0;   // arc position where the path leaves the box
  std::vector<std::pair<int, double>> mp_sequence;  // (merge point id, arc distance)
  std::array<PathSegment, 3> segments;              // approach, box, exit run

  Pose pose_at(double s) const;
  /// Arc distance of a merge point on this path, or a negative value if absent.
  double mp_distance(int mp_id) const;
  bool contains_mp(int mp_id) const { return mp_distance(mp_id) >= 0.0; }
};

class IntersectionGeometry
{
public:
  const GeometryParams& params() const { return params_; }
  double approach_length() const { return params_.approach_length; }
  double rescheduling_length() const { return params_.rescheduling_length; }
  double half_width() const { return params_.half_width; }

  const std::vector<LaneInfo>& lanes() const { return lanes_; }
  const std::vector<MergePoint>& merge_points() const { return merge_points_; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  const Trajectory& trajectory(int id) const;
  /// Trajectory for (entry lane, movement); throws std::out_of_range when the
  /// lane does not admit that movement.
  const Trajectory& trajectory(int entry_lane, Movement movement) const;
  bool has_trajectory(int entry_lane, Movement movement) const;

private:
  friend IntersectionGeometry build_intersection(const GeometryParams& params);

  GeometryParams params_;
  std::vector<LaneInfo> lanes_;
  std::vector<MergePoint> merge_points_;
  std::vector<Trajectory> trajectories_;
  std::map<std::pair<int, Movement>, int> by_lane_;
};

/// Builds the canonical four-way, two-lanes-per-approach layout. Throws
/// std::invalid_argument naming the violated bound.
IntersectionGeometry build_intersection(const GeometryParams& params);

/// Merge points shared by both trajectories, in increasing id order.
std::vector<int> conflict_points(const Trajectory& a, const Trajectory& b);

Zone zone_of(double x, const Trajectory& trajectory, const IntersectionGeometry& geometry);

/// Where CAV `j` (on `tj` at `xj`) sits in the arc coordinate of CAV `i` when
/// both occupy the same stretch of road: the shared approach lane, the same
/// path, or the same outgoing lane once both have left the box. Empty when
/// the two are not on a common stretch.
std::optional<double> position_in_frame(const Trajectory& ti, double xi, const Trajectory& tj,
                                        double xj);

}  // namespace cavsim

#endif  // CAVSIM_GEOMETRY_HPP_
