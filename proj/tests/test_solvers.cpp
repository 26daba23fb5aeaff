#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "blowup/errors.hpp"
#include "blowup/predictor.hpp"
#include "blowup/solvers.hpp"

using namespace blowup;

namespace {

Field grid2d(int n, double lo, double hi, const std::function<double(double, double)>& u) {
  Field f;
  std::vector<double> ax(n);
  for (int i = 0; i < n; ++i) ax[i] = lo + (hi - lo) * i / (n - 1);
  f.axes = {ax, ax};
  f.values.resize(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) f.values[i + n * j] = u(ax[i], ax[j]);
  return f;
}

double bump(double x, double y, double cx, double cy, double w) {
  return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w));
}

// Nearest node value; the tests below only probe nodes.
double at(const Field& f, double x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < f.axes[0].size(); ++i)
    if (std::abs(f.axes[0][i] - x) < std::abs(f.axes[0][best] - x)) best = i;
  return f.values[best];
}

SolverConfig strip(Order order, Nonlinearity nl, double eps, int nodes) {
  SolverConfig c;
  c.order = order;
  c.nonlinearity = std::move(nl);
  c.eps = eps;
  c.nodes = nodes;
  c.threshold = 10;
  return c;
}

}  // namespace

TEST_CASE("eps = 0 reduces to the reaction ODE at every node") {
  auto c = strip(Order::Fourth, Nonlinearity::exponential(), 0.0, 41);
  c.sample_times = {0.25, 0.5, 0.75};
  c.rtol = 1e-8;
  const auto r = solve_1d(c);
  REQUIRE(r.samples.size() == 3);
  for (const auto& s : r.samples) {
    const double exact = -std::log(1.0 - s.t);
    // Walls included: with no diffusion the boundary rows are identity rows.
    for (std::size_t i = 1; i + 1 < s.field.values.size(); ++i)
      CHECK(std::abs(s.field.values[i] - exact) < 1e-6);
  }
  CHECK(std::abs(r.T_eps - 1.0) < 1e-6);
}

TEST_CASE("reaction_tail matches closed forms") {
  ReactionSolution ex(Nonlinearity::exponential());
  ReactionSolution p3(Nonlinearity::power(3.0));
  for (double U : {1.0, 10.0, 50.0}) {
    CHECK(reaction_tail(ex, U) == doctest::Approx(std::exp(-U)).epsilon(1e-12));
    CHECK(reaction_tail(p3, U) == doctest::Approx(0.5 / ((1 + U) * (1 + U))).epsilon(1e-12));
  }
  ReactionSolution cu(Nonlinearity::custom("one_plus_u2", [](double u) { return 1 + u * u; },
                                           [](double u) { return 2 * u; }));
  for (double U : {0.5, 10.0, 1e3})
    CHECK(reaction_tail(cu, U) == doctest::Approx(std::numbers::pi / 2 - std::atan(U)).epsilon(1e-8));
}

TEST_CASE("extract_singularities on synthetic fields") {
  SUBCASE("four bumps on the diagonals") {
    const double c = 0.4;
    const auto f = grid2d(81, -1, 1, [&](double x, double y) {
      return bump(x, y, c, c, 0.1) + bump(x, y, -c, c, 0.1) + bump(x, y, c, -c, 0.1) +
             bump(x, y, -c, -c, 0.1);
    });
    const auto pts = extract_singularities(f);
    REQUIRE(pts.size() == 4);
    for (const auto& p : pts) {
      CHECK(std::abs(std::abs(p.x()) - c) < 1e-3);
      CHECK(std::abs(std::abs(p.y()) - c) < 1e-3);
    }
    // Lexicographic order.
    CHECK(std::is_sorted(pts.begin(), pts.end(), [](const Coord& a, const Coord& b) {
      return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y());
    }));
  }
  SUBCASE("peaks below the fraction are dropped") {
    const auto f = grid2d(61, -1, 1, [](double x, double y) {
      return bump(x, y, 0.5, 0, 0.1) + 0.3 * bump(x, y, -0.5, 0, 0.1);
    });
    CHECK(extract_singularities(f, 0.5).size() == 1);
    CHECK(extract_singularities(f, 0.2).size() == 2);
  }
  SUBCASE("close peaks merge, keeping the larger") {
    const auto f = grid2d(201, -1, 1, [](double x, double y) {
      return bump(x, y, 0.0, 0, 0.01) + 0.9 * bump(x, y, 0.03, 0, 0.01);
    });
    const auto merged = extract_singularities(f, 0.5, 4.0);
    REQUIRE(merged.size() == 1);
    CHECK(std::abs(merged[0].x()) < 0.005);
    CHECK(extract_singularities(f, 0.5, 1.0).size() == 2);
  }
  SUBCASE("quadratic refinement is exact for a parabola") {
    Field f;
    std::vector<double> ax(21);
    for (int i = 0; i < 21; ++i) ax[i] = -1 + 0.1 * i;
    f.axes = {ax};
    for (double x : ax) f.values.push_back(5 - (x - 0.0123) * (x - 0.0123));
    const auto pts = extract_singularities(f);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].x() == doctest::Approx(0.0123).epsilon(1e-10));
  }
  SUBCASE("brute-force oracle on random bumps") {
    const std::vector<std::array<double, 3>> b = {{-0.6, 0.2, 1.0}, {0.1, -0.5, 0.8}, {0.55, 0.6, 0.9}};
    const auto f = grid2d(101, -1, 1, [&](double x, double y) {
      double s = 0;
      for (const auto& q : b) s += q[2] * bump(x, y, q[0], q[1], 0.08);
      return s;
    });
    // Oracle: scan every node for a strict 8-neighbour maximum.
    const int n = 101;
    std::vector<Coord> oracle;
    for (int j = 1; j + 1 < n; ++j)
      for (int i = 1; i + 1 < n; ++i) {
        const double v = f.values[i + n * j];
        bool strict = v >= 0.5 * f.max_abs();
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di)
            if ((di || dj) && f.values[i + di + n * (j + dj)] >= v) strict = false;
        if (strict) oracle.push_back(f.coord(i + n * j));
      }
    std::sort(oracle.begin(), oracle.end(), [](const Coord& a, const Coord& b) {
      return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y());
    });
    const auto pts = extract_singularities(f);
    REQUIRE(pts.size() == oracle.size());
    for (std::size_t k = 0; k < pts.size(); ++k) CHECK((pts[k] - oracle[k]).norm() < 0.02);
  }
}

TEST_CASE("track_peaks keeps identities of moving peaks") {
  std::vector<Sample> hist;
  for (int k = 0; k < 6; ++k) {
    const double s = 0.05 * k;
    hist.push_back({0.1 * k, grid2d(81, -1, 1, [&](double x, double y) {
                      return bump(x, y, -0.5 + s, 0, 0.1) + bump(x, y, 0.5, -s, 0.1);
                    })});
  }
  const auto tr = track_peaks(hist);
  REQUIRE(tr.size() == 12);
  for (const auto& p : tr) {
    const bool left = p.track == tr.front().track;
    const int k = static_cast<int>(std::lround(p.t / 0.1));
    const Coord want = left ? Coord(-0.5 + 0.05 * k, 0, 0) : Coord(0.5, -0.05 * k, 0);
    CHECK((p.x - want).norm() < 0.01);
  }
}

TEST_CASE("second-order solver stays below the uniform state") {
  auto c = strip(Order::Second, Nonlinearity::power(2.0), 0.1, 801);
  c.threshold = 1e3;
  const auto r = solve_1d(c);
  REQUIRE(r.outcome == Outcome::BlowUp);
  CHECK(r.supersolution_excess <= c.rtol);
  CHECK(r.T_eps >= 1.0 - 1e-3);
  CHECK(r.multiplicity() == 1);
}

TEST_CASE("fourth-order strip: amplitude at t = 0.5 and two peaks at eps = 0.1") {
  auto c = strip(Order::Fourth, Nonlinearity::exponential(), 0.1, 1001);
  c.sample_times = {0.5};
  const auto r = solve_1d(c);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples[0].field.max_abs() == doctest::Approx(0.74).epsilon(0.02));
  CHECK(r.T_eps < 1.0);
  REQUIRE(r.multiplicity() == 2);
  CHECK(r.points[0].x() == doctest::Approx(-r.points[1].x()).epsilon(1e-6));
}

TEST_CASE("spatial error is second order under refinement") {
  std::vector<double> u;
  for (int n : {101, 201, 401}) {
    auto c = strip(Order::Fourth, Nonlinearity::power(2.0), 0.2, n);
    c.rtol = 1e-10;
    c.t_max = 0.3;
    c.sample_times = {0.3};
    const auto r = solve_1d(c);
    u.push_back(at(r.samples.at(0).field, 0.5));
  }
  const double ratio = (u[0] - u[1]) / (u[1] - u[2]);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("radial disc: centre follows the uniform state for small eps") {
  SolverConfig c;
  c.geometry = GeometryKind::RadialDisc;
  c.order = Order::Second;
  c.nonlinearity = Nonlinearity::power(2.0);
  c.eps = 0.05;
  c.nodes = 400;
  c.sample_times = {0.5};
  c.threshold = 10;
  const auto r = solve(c);
  REQUIRE(r.samples.size() == 1);
  CHECK(r.samples[0].field.radial);
  CHECK(r.samples[0].field.values.front() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("square fields keep the dihedral symmetry") {
  SolverConfig c;
  c.geometry = GeometryKind::Rect;
  c.eps = 0.2;
  c.nodes = 41;
  c.threshold = 10;
  c.sample_times = {0.5};
  const auto r = solve(c);
  const auto& f = r.samples.at(0).field;
  const int n = 41;
  double asym = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = f.values[i + n * j];
      asym = std::max({asym, std::abs(v - f.values[(n - 1 - i) + n * j]),
                       std::abs(v - f.values[i + n * (n - 1 - j)]), std::abs(v - f.values[j + n * i])});
    }
  CHECK(asym < 1e-10 * f.max_abs());
  REQUIRE(r.multiplicity() == 1);
  CHECK(r.points[0].norm() < 0.05);
}

TEST_CASE("runs without a crossing report no blow-up") {
  auto c = strip(Order::Second, Nonlinearity::exponential(), 0.1, 201);
  c.threshold = 1e3;
  c.t_max = 0.5;
  const auto r = solve_1d(c);
  CHECK(r.outcome == Outcome::NoBlowUp);
  CHECK(r.t_stop == doctest::Approx(0.5));
}

TEST_CASE("invalid configurations are rejected") {
  SolverConfig c;
  c.eps = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.nodes = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.threshold = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SolverConfig{};
  c.geometry = GeometryKind::Cube;
  c.nodes = 201;
  CHECK_THROWS_AS(solve(c), ConfigError);
}

TEST_CASE("summary and singularity output") {
  auto c = strip(Order::Fourth, Nonlinearity::exponential(), 0.2, 401);
  const auto r = solve_1d(c);
  std::ostringstream sum, sing;
  write_report_summary(sum, r);
  write_singularities_csv(sing, r);
  CHECK(sum.str().find("outcome: blow-up") != std::string::npos);
  CHECK(sum.str().find("multiplicity: 1") != std::string::npos);
  CHECK(sing.str().rfind("index,x,y,z\n", 0) == 0);
}
