#include "blowup/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

constexpr double kMatchBand = 1e-3;  // relative half-width for s = level
constexpr double kTieBand = 1e-6;    // relative band for simultaneous maxima
constexpr double kOuterValidity = 5.0;

double layer_width(const ReactionSolution& rs, double eps, double t, Order order) {
  return rs.gauge(regularized_time(rs, t), eps, order);
}

struct Candidate {
  Point x;
  double value;
};

// Greedy merge: keeps the largest value within each disc of the given radius.
std::vector<Candidate> cluster(std::vector<Candidate> c, double radius) {
  std::stable_sort(c.begin(), c.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  std::vector<Candidate> out;
  for (const auto& x : c) {
    const bool near = std::any_of(out.begin(), out.end(),
                                  [&](const Candidate& y) { return (x.x - y.x).norm() <= radius; });
    if (!near) out.push_back(x);
  }
  return out;
}

std::vector<Candidate> keep_ties(std::vector<Candidate> c) {
  if (c.empty()) return c;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& x : c) best = std::max(best, x.value);
  std::erase_if(c, [&](const Candidate& x) { return x.value < best - kTieBand * std::abs(best); });
  return c;
}

void sort_points(std::vector<Point>& pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
}

// Maximizes f along the polyline a -> m -> b.
Candidate maximize_on_polyline(const std::function<double(const Point&)>& f, const Point& a,
                               const Point& m, const Point& b) {
  auto at = [&](double s) { return s < 0.0 ? Point(m + (-s) * (a - m)) : Point(m + s * (b - m)); };
  const auto [s, neg] = boost::math::tools::brent_find_minima(
      [&](double s) { return -f(at(s)); }, -1.0, 1.0, 40);
  const double fm = f(m);
  if (fm >= -neg) return {m, fm};
  return {at(s), -neg};
}

}  // namespace

LayerModel LayerModel::make(Order order, const ProfileOptions& options) {
  LayerModel m{order == Order::Second ? LayerProfile::second_order() : solve_profile4(options),
               nullptr};
  m.correction = std::make_shared<const CorrectionProfile>(
      solve_curvature_correction(order, m.base, options));
  return m;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::OmegaSet: return "omega_set";
    case Regime::SkeletonPoints: return "skeleton_points";
    case Regime::Origin: return "origin";
    case Regime::StripPair: return "strip_pair";
    case Regime::DistanceArgmax: return "distance_argmax";
  }
  return "unknown";
}

double regularized_time(const ReactionSolution& rs, double t) {
  const double end = rs.form() == ReactionSolution::Form::Tabulated
                         ? rs.end_time()
                         : rs.T0() * (1.0 - ReactionSolution::kTableEndFraction);
  return std::min(t, end);
}

// ---------------------------------------------------------------------------
// One dimension

double uniform_1d(const ReactionSolution& rs, const LayerProfile& profile, double eps, double x,
                  double t) {
  if (!(t > 0.0)) return 0.0;
  const double u0 = rs.state(t);
  const double phi = rs.gauge(t, eps, profile.order());
  const double left = std::max(0.0, 1.0 + x), right = std::max(0.0, 1.0 - x);
  return u0 * (profile.value(right / phi) + profile.value(left / phi) - 1.0);
}

double outer_1d_second(const ReactionSolution& rs, double eps, double x, double t) {
  const double u0 = rs.state(t);
  const double phi = rs.gauge(t, eps, Order::Second);
  const double a = 1.0 - x, b = 1.0 + x;
  if (a <= kOuterValidity * phi || b <= kOuterValidity * phi) {
    throw RangeError(fmt::format("outer solution needs 1 +- x > {} phi (x = {}, phi = {})",
                                 kOuterValidity, x, phi));
  }
  const double c = 8.0 * phi * phi * phi / std::sqrt(std::numbers::pi);
  auto term = [&](double d) { return std::exp(-d * d / (4.0 * phi * phi)) / (d * d * d); };
  return u0 * (1.0 - c * (term(a) + term(b)));
}

Prediction predict_1d_fourth(const ReactionSolution& rs, double eps, double T_eps, double eta0,
                             bool measured) {
  Prediction p;
  p.order = Order::Fourth;
  p.eps = eps;
  p.T_eps = T_eps;
  p.T_eps_measured = measured;
  p.level = eta0 * layer_width(rs, eps, T_eps, Order::Fourth);
  if (p.level <= 1.0) {
    p.regime = Regime::StripPair;
    p.points = {Point(-(1.0 - p.level), 0.0), Point(1.0 - p.level, 0.0)};
  } else {
    p.regime = Regime::Origin;
    p.points = {Point::Zero()};
  }
  return p;
}

// ---------------------------------------------------------------------------
// Two dimensions

double uniform_2d(const PlanarDomain& dom, const ReactionSolution& rs, const LayerModel& model,
                  double eps, const Point& x, double t, bool include_curvature) {
  if (!(t > 0.0)) return 0.0;
  const double u0 = rs.state(t);
  const double phi = rs.gauge(t, eps, model.order());
  const FootSet set = dom.orthogonal_feet(x);
  const bool curv = include_curvature && model.correction;
  auto term = [&](double d, double kappa) {
    double v = model.base.value(d / phi) - 1.0;
    if (curv && kappa != 0.0) v += phi * kappa * model.correction->value(d / phi);
    return v;
  };
  double sum = 1.0;
  if (set.circle) {
    // Radial limit of the two-foot sum at the centre.
    sum += 2.0 * term(set.circle_radius, 1.0 / set.circle_radius);
  } else {
    for (const auto& f : set.feet) sum += term(f.distance, f.curvature);
  }
  return u0 * sum;
}

double outer_2d_second(const PlanarDomain& dom, const ReactionSolution& rs, double eps,
                       const Point& x, double t) {
  const double u0 = rs.state(t);
  const double phi = rs.gauge(t, eps, Order::Second);
  const FootSet set = dom.orthogonal_feet(x);
  const double c = 8.0 * phi * phi * phi / std::sqrt(std::numbers::pi);
  auto term = [&](double d) {
    if (d <= kOuterValidity * phi) {
      throw RangeError(fmt::format("outer solution needs every foot beyond {} phi", kOuterValidity));
    }
    return std::exp(-d * d / (4.0 * phi * phi)) / (d * d * d);
  };
  double sum = 0.0;
  if (set.circle) {
    sum = 2.0 * term(set.circle_radius);
  } else {
    for (const auto& f : set.feet) sum += term(f.distance);
  }
  return u0 * (1.0 - c * sum);
}

Prediction predict_second_2d(const PlanarDomain& dom, const Skeleton& skeleton) {
  std::vector<Point> seeds;
  {
    std::vector<const SkeletonSample*> medial;
    for (const auto& s : skeleton.samples) {
      if (s.medial) medial.push_back(&s);
    }
    std::stable_sort(medial.begin(), medial.end(),
                     [](const auto* a, const auto* b) { return a->distance > b->distance; });
    for (std::size_t i = 0; i < std::min<std::size_t>(8, medial.size()); ++i) {
      seeds.push_back(medial[i]->x);
    }
    if (dom.contains(Point::Zero())) seeds.push_back(Point::Zero());
  }

  struct Objective {
    const PlanarDomain* dom;
  } obj{&dom};
  gsl_multimin_function fn;
  fn.n = 2;
  fn.params = &obj;
  fn.f = [](const gsl_vector* v, void* params) {
    const auto* o = static_cast<const Objective*>(params);
    const Point x(gsl_vector_get(v, 0), gsl_vector_get(v, 1));
    if (!o->dom->contains(x)) return 1.0;
    return -o->dom->distance_to_boundary(x);
  };

  std::vector<Candidate> found;
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_vector* start = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  for (const auto& s : seeds) {
    gsl_vector_set(start, 0, s.x());
    gsl_vector_set(start, 1, s.y());
    gsl_vector_set_all(step, 0.05 * dom.diameter());
    gsl_multimin_fminimizer_set(m, &fn, start, step);
    for (int it = 0; it < 2000; ++it) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_fminimizer_size(m) < 1e-12 * dom.diameter()) break;
    }
    const gsl_vector* x = gsl_multimin_fminimizer_x(m);
    found.push_back({Point(gsl_vector_get(x, 0), gsl_vector_get(x, 1)), -m->fval});
  }
  gsl_vector_free(step);
  gsl_vector_free(start);
  gsl_multimin_fminimizer_free(m);

  Candidate best = found.front();
  for (const auto& c : found) {
    if (c.value > best.value) best = c;
  }
  // A flat maximum (a segment of equal distance, as in a rectangle) is
  // represented by the midpoint of the maximizing skeleton samples.
  Point lo = best.x, hi = best.x;
  for (const auto& s : skeleton.samples) {
    if (s.medial && s.distance >= best.value - 1e-9 * dom.diameter()) {
      lo = lo.cwiseMin(s.x);
      hi = hi.cwiseMax(s.x);
    }
  }
  Prediction p;
  p.order = Order::Second;
  p.regime = Regime::DistanceArgmax;
  p.level = best.value;
  p.points = {(hi - lo).norm() > 2.0 * skeleton.resolution ? Point(0.5 * (lo + hi)) : best.x};
  return p;
}

Prediction predict_fourth_2d(const PlanarDomain& dom, const Skeleton& skeleton,
                             const ReactionSolution& rs, const LayerModel& model, double eps,
                             double T_eps, bool measured) {
  if (model.order() != Order::Fourth) throw DomainError("predict_fourth_2d needs the fourth-order model");
  Prediction p;
  p.order = Order::Fourth;
  p.eps = eps;
  p.T_eps = T_eps;
  p.T_eps_measured = measured;
  const double t = regularized_time(rs, T_eps);
  const double eta0 = model.eta0();
  p.level = eta0 * rs.gauge(t, eps, Order::Fourth);
  p.T_S = skeleton_arrival_time(skeleton, rs, eps, Order::Fourth, eta0);
  const double res = skeleton.resolution;
  auto value = [&](const Point& x) {
    return dom.contains(x) ? uniform_2d(dom, rs, model, eps, x, t, true)
                           : -std::numeric_limits<double>::infinity();
  };

  if (t < p.T_S) {
    p.regime = Regime::OmegaSet;
    p.curves = omega_set(dom, p.level, res);
    // Candidates: curve points facing the boundary points of largest curvature.
    std::vector<std::pair<double, Point>> ranked;
    double kmax = -std::numeric_limits<double>::infinity();
    for (const auto& c : p.curves) {
      for (const auto& x : c.points) {
        if (!dom.contains(x)) continue;
        const FootSet set = dom.orthogonal_feet(x);
        double k = set.circle ? 1.0 / set.circle_radius : 0.0;
        double d = std::numeric_limits<double>::infinity();
        for (const auto& f : set.feet) {
          if (f.distance < d) {
            d = f.distance;
            k = f.curvature;
          }
        }
        ranked.emplace_back(k, x);
        kmax = std::max(kmax, k);
      }
    }
    for (const auto& [k, x] : ranked) {
      if (k >= kmax - kTieBand * std::abs(kmax)) p.points.push_back(x);
    }
    return p;
  }

  // Medial samples grouped by branch, in sample order.
  std::vector<const SkeletonSample*> medial;
  for (const auto& s : skeleton.samples) {
    if (s.medial) medial.push_back(&s);
  }
  std::vector<Candidate> cands;
  for (std::size_t a = 0; a < medial.size(); ++a) {
    const auto& sa = *medial[a];
    if (std::abs(sa.s - p.level) <= kMatchBand * p.level) cands.push_back({sa.x, 0.0});
    for (std::size_t b = a + 1; b < medial.size(); ++b) {
      const auto& sb = *medial[b];
      if (sb.branch != sa.branch || (sa.x - sb.x).norm() > 2.0 * res) continue;
      const double lo = std::min(sa.s, sb.s), hi = std::max(sa.s, sb.s);
      if (lo < p.level && p.level < hi) {
        const double w = (p.level - sa.s) / (sb.s - sa.s);
        cands.push_back({sa.x + w * (sb.x - sa.x), 0.0});
      }
    }
  }

  if (!cands.empty()) {
    // Average each group of nearby matches, then rank groups by uniform_2d.
    std::vector<Candidate> groups;
    std::vector<int> count;
    for (const auto& c : cands) {
      bool merged = false;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        if ((groups[g].x / count[g] - c.x).norm() <= 2.0 * res) {
          groups[g].x += c.x;
          ++count[g];
          merged = true;
          break;
        }
      }
      if (!merged) {
        groups.push_back(c);
        count.push_back(1);
      }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      groups[g].x /= count[g];
      groups[g].value = value(groups[g].x);
    }
    for (const auto& c : keep_ties(std::move(groups))) p.points.push_back(c.x);
  } else {
    // The level has passed every medial branch: rank the medial samples by the
    // curvature-corrected uniform solution and refine along their branch.
    std::vector<Candidate> all;
    for (const auto* s : medial) all.push_back({s->x, value(s->x)});
    const std::vector<Candidate> heads = cluster(all, 4.0 * res);
    const double top = heads.front().value;
    std::vector<Candidate> refined;
    for (const auto& c : heads) {
      if (c.value < top - 1e-2 * std::abs(top)) continue;
      const SkeletonSample* self = nullptr;
      for (const auto* s : medial) {
        if (s->x == c.x) self = s;
      }
      // Nearest neighbours on the same branch, one on either side.
      const SkeletonSample *na = nullptr, *nb = nullptr;
      for (const auto* s : medial) {
        if (s == self || s->branch != self->branch || (s->x - c.x).norm() > 2.5 * res) continue;
        if (!na || (s->x - c.x).norm() < (na->x - c.x).norm()) na = s;
      }
      for (const auto* s : medial) {
        if (!na || s == self || s->branch != self->branch) continue;
        if ((s->x - c.x).norm() > 2.5 * res || (s->x - c.x).dot(na->x - c.x) >= 0.0) continue;
        if (!nb || (s->x - c.x).norm() < (nb->x - c.x).norm()) nb = s;
      }
      if (na && nb) {
        refined.push_back(maximize_on_polyline(value, na->x, c.x, nb->x));
      } else {
        refined.push_back(c);
      }
    }
    for (const auto& c : keep_ties(cluster(refined, 4.0 * res))) p.points.push_back(c.x);
  }
  sort_points(p.points);
  const Point centre =
      dom.shape() == PlanarDomain::Shape::Rectangle ? Point(dom.bounds().center()) : Point::Zero();
  const bool origin = p.points.size() == 1 && (p.points.front() - centre).norm() <= 2.0 * res;
  p.regime = origin ? Regime::Origin : Regime::SkeletonPoints;
  return p;
}

double critical_eps(const ReactionSolution& rs, double eta0, double s_target,
                    const std::function<double(double)>& T_model, Order order) {
  if (!(s_target > 0.0)) throw RangeError("critical_eps needs a positive target distance");
  auto T = [&](double eps) { return T_model ? T_model(eps) : rs.T0(); };
  auto g = [&](double eps) {
    return eta0 * rs.gauge(regularized_time(rs, T(eps)), eps, order) - s_target;
  };
  double lo = 1e-3 * s_target, hi = s_target;
  for (int i = 0; i < 60 && g(lo) > 0.0; ++i) lo *= 0.5;
  for (int i = 0; i < 60 && g(hi) < 0.0; ++i) hi *= 2.0;
  const double glo = g(lo), ghi = g(hi);
  if (!(glo <= 0.0 && ghi >= 0.0)) {
    throw RangeError(fmt::format("critical_eps: no sign change for s_target = {}", s_target));
  }
  boost::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (a + b);
}

void write_prediction_csv(std::ostream& os, const std::vector<Prediction>& predictions) {
  os << "regime,order,eps,T_eps,T_eps_source,T_S,level,index,x,y\n";
  for (const auto& p : predictions) {
    const auto head = fmt::format("{},{},{:.10g},{:.10g},{},{:.10g},{:.10g}", regime_name(p.regime),
                                  p.order == Order::Fourth ? 4 : 2, p.eps, p.T_eps,
                                  p.T_eps_measured ? "solver" : "T0", p.T_S, p.level);
    if (p.points.empty()) fmt::print(os, "{},,,\n", head);
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      fmt::print(os, "{},{},{:.10g},{:.10g}\n", head, i, p.points[i].x(), p.points[i].y());
    }
  }
}

}  // namespace blowup
