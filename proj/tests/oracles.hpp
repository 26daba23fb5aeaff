#pragma once

// Independent reference computations shared by the tests and the acceptance run.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "blowup/geometry.hpp"

namespace oracle {

// Shooting oracle for -v'''' + (eta/4) v' - v = -1. The two decaying far-field
// modes Re/Im of eta^-2 exp(c eta^{4/3}) are integrated from eta_far down to the
// origin, where v = 1 + a m1 + b m2 must satisfy v(0) = v'(0) = 0.
struct Shooting {
  using State = std::array<double, 4>;
  static constexpr double kFar = 20.0;

  static State far_mode(bool imag) {
    using cd = std::complex<double>;
    const double w = 3.0 * std::pow(2.0, -11.0 / 3.0);
    const cd c = cd(-1.0, std::sqrt(3.0)) * w;
    const double x = kFar;
    const double s1 = 4.0 / 3.0 * std::cbrt(x), s2 = 4.0 / 9.0 * std::pow(x, -2.0 / 3.0),
                 s3 = -8.0 / 27.0 * std::pow(x, -5.0 / 3.0);
    const cd g = std::pow(x, -2.0) * std::exp(c * std::pow(x, 4.0 / 3.0));
    const cd l1 = -2.0 / x + c * s1, l2 = 2.0 / (x * x) + c * s2, l3 = -4.0 / (x * x * x) + c * s3;
    const cd y[4] = {g, l1 * g, (l2 + l1 * l1) * g, (l3 + 3.0 * l1 * l2 + l1 * l1 * l1) * g};
    State out;
    for (int k = 0; k < 4; ++k) out[k] = imag ? y[k].imag() : y[k].real();
    return out;
  }

  static State at(State y, double eta) {
    namespace ode = boost::numeric::odeint;
    auto rhs = [](const State& s, State& ds, double x) {
      ds = {s[1], s[2], s[3], 0.25 * x * s[1] - s[0]};
    };
    ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()),
                            rhs, y, kFar, eta, -1e-3);
    return y;
  }

  double a = 0.0, b = 0.0;

  Shooting() {
    const State m1 = at(far_mode(false), 0.0), m2 = at(far_mode(true), 0.0);
    // 1 + a m1 + b m2 = 0 and a m1' + b m2' = 0.
    const double det = m1[0] * m2[1] - m2[0] * m1[1];
    a = -m2[1] / det;
    b = m1[1] / det;
  }

  double dv(double eta) const {
    const State m1 = at(far_mode(false), eta), m2 = at(far_mode(true), eta);
    return a * m1[1] + b * m2[1];
  }

  double peak() const {
    double lo = 3.0, hi = 4.5;
    if (!(dv(lo) > 0.0 && dv(hi) < 0.0)) throw std::runtime_error("shooting: peak not bracketed");
    while (hi - lo > 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (dv(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

// Distance from p to the union of the axes and diagonals of the square.
inline double square_skeleton_distance(const blowup::Point& p) {
  const double ax = std::min(std::abs(p.x()), std::abs(p.y()));
  const double dg = std::min(std::abs(p.x() - p.y()), std::abs(p.x() + p.y())) / std::sqrt(2.0);
  return std::min(ax, dg);
}

// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
