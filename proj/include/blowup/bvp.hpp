#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace blowup {

/// Linear first-order system y' = A(eta) y + g(eta) on [0, eta_max] with
/// separated point conditions y_c(0) = value or y_c(eta_max) = value.
struct LinearBvp {
  enum class Side { Left, Right };
  struct Condition {
    Side side;
    int component;
    double value;
  };
  using Coefficients =
      std::function<void(double eta, Eigen::Ref<Eigen::MatrixXd> a, Eigen::Ref<Eigen::VectorXd> g)>;

  int dim = 0;
  Coefficients coefficients;
  std::vector<Condition> conditions;
};

struct BvpSolution {
  std::vector<double> eta;
  /// One row per node, one column per component.
  Eigen::MatrixXd y;
  /// Normwise relative backward error of the assembled sparse system.
  double residual = 0.0;
};

/// Hermite-Simpson (fourth-order Lobatto IIIA) collocation on a uniform mesh
/// of step ~h, solved with a sparse LU factorisation.
BvpSolution solve_linear_bvp(const LinearBvp& bvp, double eta_max, double h);

/// Quintic Hermite interpolation from values and first two derivatives at the
/// ends of [x0, x0 + h]; returns the k-th derivative (k <= 2) at x.
double hermite5(double x0, double h, const double (&left)[3], const double (&right)[3], double x,
                int k = 0);

}  // namespace blowup
