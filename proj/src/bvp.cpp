#include "blowup/bvp.hpp"

#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "blowup/errors.hpp"

namespace blowup {

BvpSolution solve_linear_bvp(const LinearBvp& bvp, double eta_max, double h) {
  const int d = bvp.dim;
  if (d <= 0 || static_cast<int>(bvp.conditions.size()) != d) {
    throw ConvergenceError("linear BVP needs exactly `dim` boundary conditions");
  }
  const int intervals = static_cast<int>(std::lround(eta_max / h));
  const double step = eta_max / intervals;
  const int n = d * (intervals + 1);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(intervals) * 2 * d * d + d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd a0(d, d), a1(d, d), am(d, d);
  Eigen::VectorXd g0(d), g1(d), gm(d);

  std::vector<double> eta(intervals + 1);
  for (int k = 0; k <= intervals; ++k) eta[k] = k * step;

  bvp.coefficients(eta[0], a0, g0);
  int row = 0;
  for (int k = 0; k < intervals; ++k) {
    const double mid = 0.5 * (eta[k] + eta[k + 1]);
    bvp.coefficients(eta[k + 1], a1, g1);
    bvp.coefficients(mid, am, gm);
    // y_m = (y0 + y1)/2 + h/8 (f0 - f1), then Simpson on f over the interval.
    const Eigen::MatrixXd m0 = 0.5 * id + step / 8.0 * a0;
    const Eigen::MatrixXd m1 = 0.5 * id - step / 8.0 * a1;
    const Eigen::VectorXd cm = step / 8.0 * (g0 - g1);
    const Eigen::MatrixXd c0 = -id - step / 6.0 * a0 - 4.0 * step / 6.0 * am * m0;
    const Eigen::MatrixXd c1 = id - step / 6.0 * a1 - 4.0 * step / 6.0 * am * m1;
    const Eigen::VectorXd r = step / 6.0 * (g0 + g1 + 4.0 * gm + 4.0 * am * cm);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (c0(i, j) != 0.0) entries.emplace_back(row + i, d * k + j, c0(i, j));
        if (c1(i, j) != 0.0) entries.emplace_back(row + i, d * (k + 1) + j, c1(i, j));
      }
      rhs(row + i) = r(i);
    }
    row += d;
    a0 = a1;
    g0 = g1;
  }
  for (const auto& c : bvp.conditions) {
    const int node = c.side == LinearBvp::Side::Left ? 0 : intervals;
    entries.emplace_back(row, d * node + c.component, 1.0);
    rhs(row) = c.value;
    ++row;
  }

  Eigen::SparseMatrix<double> mat(n, n);
  mat.setFromTriplets(entries.begin(), entries.end());
  mat.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(mat);
  if (lu.info() != Eigen::Success) throw ConvergenceError("linear BVP: factorisation failed");
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) {
    throw ConvergenceError("linear BVP: solve failed");
  }

  double mat_norm = 0.0;
  {
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < mat.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it) {
        row_sums(it.row()) += std::abs(it.value());
      }
    }
    mat_norm = row_sums.maxCoeff();
  }
  const double res = (mat * x - rhs).lpNorm<Eigen::Infinity>();
  const double denom = mat_norm * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();

  BvpSolution out;
  out.eta = std::move(eta);
  out.y = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x.data(), intervals + 1, d);
  out.residual = denom > 0.0 ? res / denom : res;
  return out;
}

double hermite5(double x0, double h, const double (&left)[3], const double (&right)[3], double x,
                int k) {
  // Basis on s in [0, 1]; derivatives pick up 1/h^k.
  const double s = (x - x0) / h;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  double h0, h1, h2, h3, h4, h5;
  switch (k) {
    case 0:
      h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
      h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
      h2 = 0.5 * (s2 - 3 * s3 + 3 * s4 - s5);
      h3 = 10 * s3 - 15 * s4 + 6 * s5;
      h4 = -4 * s3 + 7 * s4 - 3 * s5;
      h5 = 0.5 * (s3 - 2 * s4 + s5);
      break;
    case 1:
      h0 = -30 * s2 + 60 * s3 - 30 * s4;
      h1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
      h2 = 0.5 * (2 * s - 9 * s2 + 12 * s3 - 5 * s4);
      h3 = 30 * s2 - 60 * s3 + 30 * s4;
      h4 = -12 * s2 + 28 * s3 - 15 * s4;
      h5 = 0.5 * (3 * s2 - 8 * s3 + 5 * s4);
      break;
    default:
      h0 = -60 * s + 180 * s2 - 120 * s3;
      h1 = -36 * s + 96 * s2 - 60 * s3;
      h2 = 0.5 * (2 - 18 * s + 36 * s2 - 20 * s3);
      h3 = 60 * s - 180 * s2 + 120 * s3;
      h4 = -24 * s + 84 * s2 - 60 * s3;
      h5 = 0.5 * (6 * s - 24 * s2 + 20 * s3);
      break;
  }
  const double scale = k == 0 ? 1.0 : (k == 1 ? 1.0 / h : 1.0 / (h * h));
  return scale * (h0 * left[0] + h1 * h * left[1] + h2 * h * h * left[2] + h3 * right[0] +
                  h4 * h * right[1] + h5 * h * h * right[2]);
}

}  // namespace blowup
