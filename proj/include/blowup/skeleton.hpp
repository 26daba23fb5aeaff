#pragma once

#include <iosfwd>
#include <vector>

#include "blowup/geometry.hpp"
#include "blowup/reaction.hpp"

namespace blowup {

struct FootPair {
  Foot first;
  Foot second;
  double distance = 0.0;  // mean of the two (equal to tolerance) foot distances
};

struct SkeletonSample {
  Point x = Point::Zero();
  /// Smallest distance over the qualifying equidistant foot pairs.
  double s = 0.0;
  /// d(x, boundary).
  double distance = 0.0;
  /// True when the realizing pair is also the nearest pair, i.e. the sample
  /// belongs to the partial (medial) skeleton.
  bool medial = false;
  std::vector<FootPair> pairs;
  int branch = -1;
};

struct Skeleton {
  std::vector<SkeletonSample> samples;
  double resolution = 0.0;
  /// Equidistance band, 1e-6 diam.
  double tolerance = 0.0;
  int branch_count = 0;

  /// Minimum of s over the medial samples (or over all samples).
  double s_min(bool medial_only = true) const;
};

/// Scans the grid {resolution * (i, j)} inside the domain for sign changes of
/// d_a - d_b between tracked orthogonal feet, refines each crossing by
/// bisection and links the refined samples into branches. Grid nodes that are
/// already equidistant are kept as they are. Throws GeometryError when nothing
/// is found.
Skeleton compute_skeleton(const PlanarDomain& dom, double resolution);

struct LevelCurve {
  std::vector<Point> points;
  bool closed = false;
};

/// Level set {d(x, boundary) = level} by marching squares on a grid of the
/// given spacing. Empty when the level exceeds the inradius.
std::vector<LevelCurve> omega_set(const PlanarDomain& dom, double level, double resolution = 0.01);

/// First time at which eta0 phi(t; eps) reaches the smallest medial s:
/// 0 when the skeleton touches the boundary (s_min <= 1.5 resolution),
/// +inf when the required u0 exceeds the reaction range.
double skeleton_arrival_time(const Skeleton& skeleton, const ReactionSolution& rs, double eps,
                             Order order, double eta0);

/// x,y,s,distance,medial,branch,pairs.
void write_skeleton_csv(std::ostream& os, const Skeleton& skeleton);
/// curve,x,y.
void write_level_csv(std::ostream& os, const std::vector<LevelCurve>& curves);

}  // namespace blowup
