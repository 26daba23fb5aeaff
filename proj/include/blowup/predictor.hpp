#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "blowup/geometry.hpp"
#include "blowup/profiles.hpp"
#include "blowup/reaction.hpp"
#include "blowup/skeleton.hpp"

namespace blowup {

/// Leading-order profile plus its curvature correction.
struct LayerModel {
  LayerProfile base;
  std::shared_ptr<const CorrectionProfile> correction;

  Order order() const { return base.order(); }
  /// Solves (Fourth) or wraps (Second) the profiles for `order`.
  static LayerModel make(Order order, const ProfileOptions& options = {});
  /// Fourth-order peak location eta0 (0 for Second).
  double eta0() const { return order() == Order::Fourth ? base.peak().eta : 0.0; }
};

enum class Regime { OmegaSet, SkeletonPoints, Origin, StripPair, DistanceArgmax };
const char* regime_name(Regime r);

struct Prediction {
  Regime regime = Regime::Origin;
  /// Predicted points; 1D predictions use the x coordinate only.
  std::vector<Point> points;
  /// The level curve omega(T_eps) for the OmegaSet regime.
  std::vector<LevelCurve> curves;
  Order order = Order::Fourth;
  double eps = 0.0;
  double T_eps = 0.0;
  /// False when T_eps fell back to the reaction blow-up time.
  bool T_eps_measured = false;
  double T_S = 0.0;
  /// eta0 phi(T_eps; eps).
  double level = 0.0;

  std::size_t multiplicity() const { return points.size(); }
};

/// Times at or beyond the end of the reaction range are replaced by it.
double regularized_time(const ReactionSolution& rs, double t);

/// u0(t) [v((1-x)/phi) + v((1+x)/phi) - 1] on the strip [-1, 1].
double uniform_1d(const ReactionSolution& rs, const LayerProfile& profile, double eps, double x,
                  double t);
/// Far-field form of uniform_1d for the second-order problem; RangeError unless 1 +- x > 5 phi.
double outer_1d_second(const ReactionSolution& rs, double eps, double x, double t);
/// StripPair +-(1 - eta0 phi_c) while eta0 phi_c <= 1, else Origin.
Prediction predict_1d_fourth(const ReactionSolution& rs, double eps, double T_eps, double eta0,
                             bool measured = false);

/// u0(t) [1 + sum_j (v0(d_j/phi) + phi kappa_j vbar1(d_j/phi) - 1)] over the orthogonal feet.
double uniform_2d(const PlanarDomain& dom, const ReactionSolution& rs, const LayerModel& model,
                  double eps, const Point& x, double t, bool include_curvature = true);
/// Far-field second-order form; RangeError unless every foot lies beyond 5 phi.
double outer_2d_second(const PlanarDomain& dom, const ReactionSolution& rs, double eps,
                       const Point& x, double t);

/// Argmax of the distance to the boundary, by multi-start simplex searches
/// seeded from the medial skeleton. A maximizing segment reports its midpoint.
Prediction predict_second_2d(const PlanarDomain& dom, const Skeleton& skeleton);

/// Omega-set regime before the skeleton arrival time, skeleton points after it.
Prediction predict_fourth_2d(const PlanarDomain& dom, const Skeleton& skeleton,
                             const ReactionSolution& rs, const LayerModel& model, double eps,
                             double T_eps, bool measured = false);

/// eps solving s_target = eta0 phi(T(eps); eps). `T_model` defaults to T0.
double critical_eps(const ReactionSolution& rs, double eta0, double s_target,
                    const std::function<double(double)>& T_model = {},
                    Order order = Order::Fourth);

/// regime,order,eps,T_eps,T_eps_source,T_S,level,index,x,y
void write_prediction_csv(std::ostream& os, const std::vector<Prediction>& predictions);

}  // namespace blowup
