#include "blowup/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0.0 ? t + kTwoPi : t;
}

std::vector<double> parse_numbers(std::string_view text, std::string_view what) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view tok = text.substr(0, comma);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
      throw ConfigError(fmt::format("{}: cannot read number '{}'", what, tok));
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt::format("{}", v[i]);
  return s;
}

}  // namespace

double FootSet::nearest() const {
  if (circle) return circle_radius;
  double d = std::numeric_limits<double>::infinity();
  for (const auto& f : feet) d = std::min(d, f.distance);
  return d;
}

// ---------------------------------------------------------------------------
// Radius functions

struct PlanarDomain::Radial {
  enum class Kind { Trig, Ellipse } kind = Kind::Trig;
  double c0 = 1.0;
  std::vector<double> harmonics;  // a1, b1, a2, b2, ...
  double a = 1.0, b = 1.0;

  double eval(double t, int k) const {
    if (kind == Kind::Ellipse) {
      const double d = 0.5 * (b * b - a * a);
      const double q = 0.5 * (a * a + b * b) + d * std::cos(2 * t);
      const double q1 = -2.0 * d * std::sin(2 * t);
      const double q2 = -4.0 * d * std::cos(2 * t);
      const double ab = a * b;
      switch (k) {
        case 0: return ab / std::sqrt(q);
        case 1: return -0.5 * ab * q1 * std::pow(q, -1.5);
        default: return ab * (0.75 * q1 * q1 * std::pow(q, -2.5) - 0.5 * q2 * std::pow(q, -1.5));
      }
    }
    double r = k == 0 ? c0 : 0.0;
    for (std::size_t i = 0; i < harmonics.size(); i += 2) {
      const double n = static_cast<double>(i / 2 + 1);
      const double ak = harmonics[i];
      const double bk = i + 1 < harmonics.size() ? harmonics[i + 1] : 0.0;
      const double c = std::cos(n * t), s = std::sin(n * t);
      switch (k) {
        case 0: r += ak * c + bk * s; break;
        case 1: r += n * (-ak * s + bk * c); break;
        default: r += -n * n * (ak * c + bk * s); break;
      }
    }
    return r;
  }

  Point point(double t) const {
    const double r = eval(t, 0);
    return {r * std::cos(t), r * std::sin(t)};
  }
  Point velocity(double t) const {
    const double r = eval(t, 0), r1 = eval(t, 1);
    return {r1 * std::cos(t) - r * std::sin(t), r1 * std::sin(t) + r * std::cos(t)};
  }
  double curvature(double t) const {
    const double r = eval(t, 0), r1 = eval(t, 1), r2 = eval(t, 2);
    return (r * r + 2 * r1 * r1 - r * r2) / std::pow(r * r + r1 * r1, 1.5);
  }
  bool circle() const {
    return kind == Kind::Trig &&
           std::all_of(harmonics.begin(), harmonics.end(), [](double h) { return h == 0.0; });
  }
};

struct PlanarDomain::Cache {
  std::vector<double> theta;
  std::vector<Point> y;
  std::vector<Point> dy;
};

// ---------------------------------------------------------------------------
// Construction

PlanarDomain PlanarDomain::disc(double radius) { return polar(radius, {}); }

PlanarDomain PlanarDomain::polar(double c0, std::vector<double> harmonics) {
  while (!harmonics.empty() && harmonics.back() == 0.0) harmonics.pop_back();
  PlanarDomain d;
  d.shape_ = Shape::Polar;
  auto radial = std::make_shared<Radial>();
  radial->c0 = c0;
  radial->harmonics = std::move(harmonics);
  d.spec_ = radial->harmonics.empty() && c0 == 1.0
                ? "disc"
                : fmt::format("polar:{}", join_numbers([&] {
                                std::vector<double> all{c0};
                                all.insert(all.end(), radial->harmonics.begin(),
                                           radial->harmonics.end());
                                return all;
                              }()));
  d.radial_ = std::move(radial);
  d.finish();
  return d;
}

PlanarDomain PlanarDomain::ellipse(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw GeometryError("ellipse semi-axes must be positive");
  PlanarDomain d;
  d.shape_ = Shape::Polar;
  auto radial = std::make_shared<Radial>();
  radial->kind = Radial::Kind::Ellipse;
  radial->a = a;
  radial->b = b;
  d.radial_ = std::move(radial);
  d.spec_ = fmt::format("ellipse:{},{}", a, b);
  d.finish();
  return d;
}

PlanarDomain PlanarDomain::potato() { return polar(1.0, {0.3, 0.0, 0.0, 0.0, 0.0, -0.3}); }

PlanarDomain PlanarDomain::rectangle(double xmin, double xmax, double ymin, double ymax) {
  if (!(xmax > xmin && ymax > ymin)) throw GeometryError("rectangle needs xmin < xmax, ymin < ymax");
  PlanarDomain d;
  d.shape_ = Shape::Rectangle;
  d.xmin_ = xmin;
  d.xmax_ = xmax;
  d.ymin_ = ymin;
  d.ymax_ = ymax;
  d.spec_ = fmt::format("rect:{},{},{},{}", xmin, xmax, ymin, ymax);
  d.finish();
  return d;
}

PlanarDomain PlanarDomain::square(double half) {
  PlanarDomain d = rectangle(-half, half, -half, half);
  d.spec_ = fmt::format("square:{}", 2.0 * half);
  return d;
}

PlanarDomain PlanarDomain::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::vector<double> args =
      colon == std::string_view::npos ? std::vector<double>{}
                                      : parse_numbers(text.substr(colon + 1), head);
  auto need = [&](std::size_t n) {
    if (args.size() != n) {
      throw ConfigError(fmt::format("domain '{}' expects {} numbers", text, n));
    }
  };
  if (head == "disc") {
    if (args.empty()) return disc();
    need(1);
    return disc(args[0]);
  }
  if (head == "square") {
    need(1);
    if (!(args[0] > 0.0)) throw GeometryError("square side must be positive");
    return square(0.5 * args[0]);
  }
  if (head == "rect") {
    if (args.size() == 2) {
      if (!(args[0] > 0.0 && args[1] > 0.0)) throw GeometryError("rectangle half-widths must be positive");
      PlanarDomain d = rectangle(-args[0], args[0], -args[1], args[1]);
      d.spec_ = fmt::format("rect:{},{}", args[0], args[1]);
      return d;
    }
    need(4);
    return rectangle(args[0], args[1], args[2], args[3]);
  }
  if (head == "ellipse") {
    need(2);
    return ellipse(args[0], args[1]);
  }
  if (head == "polar") {
    if (args.empty()) throw ConfigError("polar domain needs at least c0");
    return polar(args[0], {args.begin() + 1, args.end()});
  }
  throw ConfigError(fmt::format("unknown domain '{}'", text));
}

void PlanarDomain::finish() {
  if (shape_ == Shape::Rectangle) {
    bounds_ = Eigen::AlignedBox2d(Point(xmin_, ymin_), Point(xmax_, ymax_));
    diameter_ = std::hypot(xmax_ - xmin_, ymax_ - ymin_);
    roughness_ = 0.0;
    return;
  }
  constexpr int kCheck = 4096;
  double rmin = std::numeric_limits<double>::infinity(), kmax = 0.0;
  bounds_.setEmpty();
  for (int i = 0; i < kCheck; ++i) {
    const double t = kTwoPi * i / kCheck;
    const double r = radial_->eval(t, 0);
    if (!(r > 0.0)) {
      throw GeometryError(fmt::format("{}: r(theta) is not positive at theta = {}", spec_, t));
    }
    rmin = std::min(rmin, r);
    kmax = std::max(kmax, std::abs(radial_->curvature(t)));
    bounds_.extend(radial_->point(t));
  }
  roughness_ = kmax * rmin;
  if (roughness_ > kRoughnessBound) {
    warning_ = fmt::format("{}: max|kappa| * min r = {:.3g} exceeds {}; boundary-layer "
                           "predictions may be unreliable",
                           spec_, roughness_, kRoughnessBound);
  }

  auto cache = std::make_shared<Cache>();
  cache->theta.resize(kParamSamples);
  cache->y.resize(kParamSamples);
  cache->dy.resize(kParamSamples);
  for (int i = 0; i < kParamSamples; ++i) {
    const double t = kTwoPi * i / kParamSamples;
    cache->theta[i] = t;
    cache->y[i] = radial_->point(t);
    cache->dy[i] = radial_->velocity(t);
  }
  diameter_ = 0.0;
  for (int i = 0; i < kParamSamples; i += 4) {
    for (int j = i + 4; j < kParamSamples; j += 4) {
      diameter_ = std::max(diameter_, (cache->y[i] - cache->y[j]).norm());
    }
  }
  cache_ = std::move(cache);
}

// ---------------------------------------------------------------------------
// Queries

bool PlanarDomain::is_circle() const { return shape_ == Shape::Polar && radial_->circle(); }

bool PlanarDomain::contains(const Point& x) const {
  if (shape_ == Shape::Rectangle) {
    return x.x() > xmin_ && x.x() < xmax_ && x.y() > ymin_ && x.y() < ymax_;
  }
  const double rho = x.norm();
  if (rho == 0.0) return true;
  return rho < radial_->eval(std::atan2(x.y(), x.x()), 0);
}

double PlanarDomain::param_period() const {
  if (shape_ == Shape::Polar) return kTwoPi;
  return 2.0 * ((xmax_ - xmin_) + (ymax_ - ymin_));
}

double PlanarDomain::radius(double theta, int k) const {
  if (shape_ != Shape::Polar) throw GeometryError("radius() is defined for polar domains only");
  return radial_->eval(theta, k);
}

BoundaryPoint PlanarDomain::boundary_point(double param) const {
  BoundaryPoint bp;
  if (shape_ == Shape::Polar) {
    const double t = wrap_angle(param);
    bp.point = radial_->point(t);
    bp.tangent = radial_->velocity(t).normalized();
    bp.curvature = radial_->curvature(t);
    return bp;
  }
  const double w = xmax_ - xmin_, h = ymax_ - ymin_, per = param_period();
  double s = std::fmod(param, per);
  if (s < 0.0) s += per;
  const double corners[5] = {0.0, w, w + h, 2 * w + h, per};
  for (double c : corners) {
    if (std::abs(s - c) <= 1e-14 * per) {
      bp.smooth = false;
      bp.curvature = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (s < w) {
    bp.point = {xmin_ + s, ymin_};
    bp.tangent = {1.0, 0.0};
  } else if (s < w + h) {
    bp.point = {xmax_, ymin_ + (s - w)};
    bp.tangent = {0.0, 1.0};
  } else if (s < 2 * w + h) {
    bp.point = {xmax_ - (s - w - h), ymax_};
    bp.tangent = {-1.0, 0.0};
  } else {
    bp.point = {xmin_, ymax_ - (s - 2 * w - h)};
    bp.tangent = {0.0, -1.0};
  }
  if (!bp.smooth) bp.tangent = Point::Zero();
  return bp;
}

bool PlanarDomain::segment_inside(const Point& x, const Point& y) const {
  for (int j = 1; j < kSegmentSamples; ++j) {
    if (!contains(x + (y - x) * (static_cast<double>(j) / kSegmentSamples))) return false;
  }
  return true;
}

FootSet PlanarDomain::orthogonal_feet(const Point& x) const {
  FootSet out;
  if (shape_ == Shape::Rectangle) {
    const double w = xmax_ - xmin_, h = ymax_ - ymin_;
    out.feet = {
        {Point(x.x(), ymin_), x.x() - xmin_, x.y() - ymin_, 0.0, 0},
        {Point(xmax_, x.y()), w + (x.y() - ymin_), xmax_ - x.x(), 0.0, 1},
        {Point(x.x(), ymax_), w + h + (xmax_ - x.x()), ymax_ - x.y(), 0.0, 2},
        {Point(xmin_, x.y()), 2 * w + h + (ymax_ - x.y()), x.x() - xmin_, 0.0, 3},
    };
    return out;
  }
  if (is_circle() && x.norm() <= 1e-12 * diameter_) {
    out.circle = true;
    out.circle_radius = radial_->c0;
    return out;
  }
  const auto& c = *cache_;
  auto g = [&](double t) { return (x - radial_->point(t)).dot(radial_->velocity(t)); };
  auto add = [&](double t) {
    t = wrap_angle(t);
    Foot f;
    f.y = radial_->point(t);
    f.param = t;
    f.distance = (x - f.y).norm();
    f.curvature = radial_->curvature(t);
    if (segment_inside(x, f.y)) out.feet.push_back(f);
  };
  std::vector<double> gk(kParamSamples);
  for (int k = 0; k < kParamSamples; ++k) gk[k] = (x - c.y[k]).dot(c.dy[k]);
  const double dt = kTwoPi / kParamSamples;
  for (int k = 0; k < kParamSamples; ++k) {
    const int k1 = (k + 1) % kParamSamples;
    if (gk[k] == 0.0) {
      add(c.theta[k]);
    } else if (gk[k] * gk[k1] < 0.0) {
      const double a = c.theta[k];
      boost::uintmax_t iters = 100;
      const auto [lo, hi] = boost::math::tools::toms748_solve(
          g, a, a + dt, gk[k], gk[k1], boost::math::tools::eps_tolerance<double>(52), iters);
      add(0.5 * (lo + hi));
    }
  }
  return out;
}

double PlanarDomain::distance_to_boundary(const Point& x) const {
  if (shape_ == Shape::Rectangle) {
    return std::min({x.x() - xmin_, xmax_ - x.x(), x.y() - ymin_, ymax_ - x.y()});
  }
  return orthogonal_feet(x).nearest();
}

double distance_to_boundary(const PlanarDomain& dom, const Point& x) {
  return dom.distance_to_boundary(x);
}
FootSet orthogonal_feet(const PlanarDomain& dom, const Point& x) { return dom.orthogonal_feet(x); }
BoundaryPoint boundary_point(const PlanarDomain& dom, double param) {
  return dom.boundary_point(param);
}

}  // namespace blowup
