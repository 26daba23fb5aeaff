#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "blowup/errors.hpp"
#include "blowup/profiles.hpp"
#include "oracles.hpp"

using namespace blowup;

namespace {

const LayerProfile& profile4() {
  static const LayerProfile p = solve_profile4();
  return p;
}

// erfc(x) = 2/sqrt(pi) * integral_x^inf e^{-t^2} dt, by exp-sinh quadrature.
double erfc_oracle(double x) {
  boost::math::quadrature::exp_sinh<double> q;
  return 2.0 / std::sqrt(std::numbers::pi) *
         q.integrate([](double t) { return std::exp(-t * t); }, x,
                     std::numeric_limits<double>::infinity());
}

// Seven-point centred first and second derivatives.
double d1(double (*f)(double), double x, double h) {
  return (-f(x - 3 * h) + 9 * f(x - 2 * h) - 45 * f(x - h) + 45 * f(x + h) - 9 * f(x + 2 * h) +
          f(x + 3 * h)) /
         (60 * h);
}
double d2(double (*f)(double), double x, double h) {
  return (2 * f(x - 3 * h) - 27 * f(x - 2 * h) + 270 * f(x - h) - 490 * f(x) + 270 * f(x + h) -
          27 * f(x + 2 * h) + 2 * f(x + 3 * h)) /
         (180 * h * h);
}

}  // namespace

TEST_CASE("v2 closed form") {
  CHECK(std::abs(v2(0.0)) <= 1e-15);
  const double oracle =
      1.0 + 2.0 * std::exp(-1.0) / std::sqrt(std::numbers::pi) - 3.0 * erfc_oracle(1.0);
  CHECK(std::abs(v2(2.0) - oracle) <= 1e-14);
  CHECK(v2(2.0) == doctest::Approx(0.9432099).epsilon(1e-7));
  CHECK(std::abs(v2(30.0) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(v2(-1.0), DomainError);
  CHECK(v2_derivative(0.0, 2) == doctest::Approx(-1.0));
  CHECK(v2_derivative(0.0, 1) == doctest::Approx(2.0 / std::sqrt(std::numbers::pi)));
}

TEST_CASE("v2 tail") {
  const double expect = 8.0 / (std::sqrt(std::numbers::pi) * 216.0) * std::exp(-9.0);
  CHECK(1.0 - v2_tail(6.0) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(1.0 - v2_tail(6.0) == doctest::Approx(2.583e-6).epsilon(1e-3));
  const double gap = std::abs(v2(8.0) - v2_tail(8.0));
  // The next term of the expansion is a relative O(eta^-2) correction.
  CHECK(gap <= 0.2 * (1.0 - v2_tail(8.0)));
  CHECK(std::abs(v2(26.5) - v2_tail(26.5)) <= 1e-16);
  CHECK_THROWS_AS(v2_tail(4.0), DomainError);
}

TEST_CASE("v2 satisfies its ODE and is increasing") {
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double eta = 0.05 + 9.95 * i / 499.0;
    const double r = d2(v2, eta, 1e-2) + 0.5 * eta * d1(v2, eta, 1e-2) - v2(eta) + 1.0;
    worst = std::max(worst, std::abs(r));
  }
  CHECK(worst <= 1e-9);
  bool increasing = true;
  for (int i = 0; i < 2000; ++i) increasing = increasing && v2((i + 1) / 200.0) > v2(i / 200.0);
  // Past eta = 10 the profile is within rounding of 1.
  for (int i = 2000; i < 6400; ++i) increasing = increasing && v2((i + 1) / 200.0) >= v2(i / 200.0);
  CHECK(increasing);
}

TEST_CASE("fourth-order profile: boundary data and far field") {
  const auto& p = profile4();
  CHECK(p.order() == Order::Fourth);
  CHECK(std::abs(p.value(0.0)) <= 1e-12);
  CHECK(std::abs(p.derivative(0.0, 1)) <= 1e-12);
  CHECK(std::abs(p.value(p.eta_max()) - 1.0) <= 1e-6);
  CHECK(p.residual() <= 1e-9);
  CHECK(p.tail().rate == doctest::Approx(3.0 * std::pow(2.0, -11.0 / 3.0)).epsilon(1e-15));
  CHECK(p.tail().rate == doctest::Approx(0.236235).epsilon(1e-6));
  CHECK(std::abs(eval_profile4(p, 2.0 * p.eta_max()) - 1.0) <= 1e-10);
  CHECK_THROWS_AS(eval_profile4(LayerProfile::second_order(), 1.0), DomainError);
}

TEST_CASE("fourth-order profile: peak") {
  const auto& p = profile4();
  const auto peak = p.peak();
  CHECK(peak.eta > 0.0);
  CHECK(peak.eta < p.eta_max());
  CHECK(peak.value > 1.0);
  CHECK(std::abs(eval_profile4(p, peak.eta) - peak.value) <= 1e-9);
  CHECK(std::abs(p.derivative(peak.eta, 1)) <= 1e-7);
  // Unique global maximum.
  for (int i = 0; i <= 6400; ++i) {
    const double eta = i / 200.0;
    if (std::abs(eta - peak.eta) > 0.05) CHECK(p.value(eta) < peak.value);
  }
  // Golden values, pinned against the shooting oracle below.
  CHECK(peak.eta == doctest::Approx(3.7384337).epsilon(2e-8));
  CHECK(peak.value == doctest::Approx(1.0605100).epsilon(1e-7));
}

TEST_CASE("fourth-order profile: shooting oracle agrees on eta0") {
  const oracle::Shooting shoot;
  const double eta0 = shoot.peak();
  CHECK(std::abs(profile4().peak().eta - eta0) <= 1e-4);
  MESSAGE("shooting eta0 = " << eta0);
}

TEST_CASE("fourth-order profile: oscillating tail") {
  const auto& p = profile4();
  const auto& eta = p.nodes();
  const auto& v = p.column(0);
  int sign_changes = 0;
  for (std::size_t i = 1; i < eta.size(); ++i) {
    if (eta[i] < p.peak().eta) continue;
    if ((v[i] - 1.0) * (v[i - 1] - 1.0) < 0.0) ++sign_changes;
  }
  CHECK(sign_changes >= 3);

  // Local extrema of |v - 1| beyond eta = 10; the WKB amplitude carries an
  // eta^-2 prefactor, removed before fitting log amplitude against eta^{4/3}.
  std::vector<double> xs, ys;
  for (std::size_t i = 1; i + 1 < eta.size(); ++i) {
    const double w0 = v[i - 1] - 1.0, w1 = v[i] - 1.0, w2 = v[i + 1] - 1.0;
    if (eta[i] < 10.0 || std::abs(w1) < 1e-12) continue;
    if ((w1 - w0) * (w2 - w1) < 0.0) {
      xs.push_back(std::pow(eta[i], 4.0 / 3.0));
      ys.push_back(std::log(std::abs(w1) * eta[i] * eta[i]));
    }
  }
  REQUIRE(xs.size() >= 4);
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(slope / -kTailRate - 1.0) <= 0.1);

  // The fitted tail reproduces the table in the fitting window.
  const double e = 0.6 * p.eta_max();
  const double s = std::pow(e, 4.0 / 3.0);
  const double model = 1.0 + p.tail().amplitude *
                                 std::sin(std::sqrt(3.0) * kTailRate * s + p.tail().phase) *
                                 std::exp(-kTailRate * s);
  CHECK(std::abs(model - p.value(e)) <= 0.2 * std::abs(p.value(e) - 1.0) + 1e-14);
}

TEST_CASE("fourth-order profile: mesh halving") {
  const auto fine = solve_profile4({1.0 / 400.0, 32.0});
  CHECK(std::abs(fine.peak().eta - profile4().peak().eta) < 1e-5);
}

TEST_CASE("interpolated derivatives are consistent") {
  const auto& p = profile4();
  for (double eta : {0.3, 1.7, 3.1, 5.55, 12.3}) {
    const double h = 1e-4;
    for (int k = 0; k < 3; ++k) {
      const double fd = (p.derivative(eta + h, k) - p.derivative(eta - h, k)) / (2 * h);
      CHECK(p.derivative(eta, k + 1) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("profile CSV round trip") {
  const auto& p = profile4();
  std::stringstream ss;
  write_profile_csv(ss, p);
  const std::string text = ss.str();
  CHECK(text.starts_with("# order=4"));
  const auto q = read_profile_csv(ss);
  CHECK(q.peak().eta == p.peak().eta);
  CHECK(q.tail().amplitude == p.tail().amplitude);
  for (double eta : {0.0, 0.37, 3.73, 17.2, 40.0}) CHECK(q.value(eta) == p.value(eta));
  std::stringstream again;
  write_profile_csv(again, q);
  CHECK(again.str() == text);

  std::stringstream bad("eta,v\n0,0\n");
  CHECK_THROWS_AS(read_profile_csv(bad), ConfigError);
}

TEST_CASE("curvature corrections") {
  ProfileOptions opt;
  const auto c2 = solve_curvature_correction(Order::Second, LayerProfile::second_order(), opt);
  const auto c4 = solve_curvature_correction(Order::Fourth, profile4(), opt);
  CHECK_THROWS_AS(solve_curvature_correction(Order::Fourth, LayerProfile::second_order()),
                  DomainError);
  for (const auto* c : {&c2, &c4}) {
    CHECK(std::abs(c->value(0.0)) <= 1e-12);
    CHECK(std::abs(c->value(c->nodes().back())) <= 1e-6);
    CHECK(c->residual() <= 1e-9);
    CHECK(c->value(100.0) == 0.0);
  }
  CHECK(std::abs(c4.column(1)[0]) <= 1e-12);

  // Residual with an independently coded centred stencil on the top column.
  const auto& eta = c4.nodes();
  const double h = eta[1] - eta[0];
  double worst4 = 0.0, worst2 = 0.0;
  for (std::size_t i = 2; i + 2 < eta.size(); ++i) {
    const auto& w3 = c4.column(3);
    const double w4 = (w3[i - 2] - 8 * w3[i - 1] + 8 * w3[i + 1] - w3[i + 2]) / (12 * h);
    const double r = -w4 + 0.25 * eta[i] * c4.column(1)[i] - 1.25 * c4.column(0)[i] +
                     2.0 * profile4().derivative(eta[i], 3);
    worst4 = std::max(worst4, std::abs(r));

    const auto& w1 = c2.column(1);
    const double w2 = (w1[i - 2] - 8 * w1[i - 1] + 8 * w1[i + 1] - w1[i + 2]) / (12 * h);
    const double r2 = w2 + 0.5 * eta[i] * w1[i] - 1.5 * c2.column(0)[i] - v2_derivative(eta[i], 1);
    worst2 = std::max(worst2, std::abs(r2));
  }
  CHECK(worst4 <= 1e-9);
  CHECK(worst2 <= 1e-9);
  MESSAGE("stencil residuals " << worst2 << " " << worst4);
}
