#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace blowup {

using Point = Eigen::Vector2d;

struct BoundaryPoint {
  Point point = Point::Zero();
  Point tangent = Point::Zero();  // unit, counter-clockwise
  double curvature = 0.0;         // positive where the boundary is convex
  bool smooth = true;             // false at rectangle corners
};

/// Orthogonal foot y of an interior point x on the boundary.
struct Foot {
  Point y = Point::Zero();
  double param = 0.0;  // polar angle, or arc length for rectangles
  double distance = 0.0;
  double curvature = 0.0;
  int edge = -1;  // rectangle edge 0..3 (bottom, right, top, left); -1 on smooth boundaries
};

struct FootSet {
  std::vector<Foot> feet;
  /// Set at the centre of a disc, where every boundary point is a foot; `feet`
  /// is then empty and every foot lies at `circle_radius`.
  bool circle = false;
  double circle_radius = 0.0;

  /// Smallest foot distance.
  double nearest() const;
};

/// Star-shaped planar domain: a smooth polar curve r(theta) or an axis-aligned
/// rectangle. Values are immutable and queries are thread-safe.
class PlanarDomain {
 public:
  enum class Shape { Polar, Rectangle };

  static PlanarDomain disc(double radius = 1.0);
  /// r(theta) = c0 + sum_k (a_k cos k theta + b_k sin k theta); `harmonics`
  /// holds a_1, b_1, a_2, b_2, ...
  static PlanarDomain polar(double c0, std::vector<double> harmonics);
  /// Ellipse with semi-axis a along x and b along y, in polar form.
  static PlanarDomain ellipse(double a, double b);
  /// r(theta) = 1 + 0.3 (cos theta - sin 3 theta).
  static PlanarDomain potato();
  static PlanarDomain rectangle(double xmin, double xmax, double ymin, double ymax);
  /// [-half, half]^2.
  static PlanarDomain square(double half = 1.0);

  /// `disc`, `square:<L>`, `rect:<a>,<b>` (centred half-widths),
  /// `rect:<xmin>,<xmax>,<ymin>,<ymax>`, `ellipse:<a>,<b>`, `polar:<c0>,<a1>,<b1>,...`.
  /// Throws ConfigError on malformed text, GeometryError on invalid shapes.
  static PlanarDomain parse(std::string_view text);

  Shape shape() const { return shape_; }
  /// Config spelling that parses back to an equal domain.
  const std::string& spec() const { return spec_; }
  bool is_circle() const;

  /// Strict interior membership.
  bool contains(const Point& x) const;
  double diameter() const { return diameter_; }
  Eigen::AlignedBox2d bounds() const { return bounds_; }
  /// Length of the parameter range: 2 pi for polar shapes, the perimeter for rectangles.
  double param_period() const;

  /// k-th derivative of r(theta), k <= 2. Polar shapes only.
  double radius(double theta, int k = 0) const;
  BoundaryPoint boundary_point(double param) const;

  FootSet orthogonal_feet(const Point& x) const;
  double distance_to_boundary(const Point& x) const;

  /// max |kappa| * min r; large values mean the layer theory is unreliable.
  double roughness() const { return roughness_; }
  /// Non-empty when roughness() exceeds the bound given at construction.
  const std::string& warning() const { return warning_; }

  static constexpr double kRoughnessBound = 10.0;
  static constexpr int kParamSamples = 2048;
  static constexpr int kSegmentSamples = 64;

 private:
  struct Radial;
  struct Cache;
  PlanarDomain() = default;
  void finish();
  bool segment_inside(const Point& x, const Point& y) const;

  Shape shape_ = Shape::Polar;
  std::string spec_;
  std::shared_ptr<const Radial> radial_;
  std::shared_ptr<const Cache> cache_;
  double xmin_ = 0, xmax_ = 0, ymin_ = 0, ymax_ = 0;
  double diameter_ = 0.0;
  Eigen::AlignedBox2d bounds_;
  double roughness_ = 0.0;
  std::string warning_;
};

double distance_to_boundary(const PlanarDomain& dom, const Point& x);
FootSet orthogonal_feet(const PlanarDomain& dom, const Point& x);
BoundaryPoint boundary_point(const PlanarDomain& dom, double param);

}  // namespace blowup
