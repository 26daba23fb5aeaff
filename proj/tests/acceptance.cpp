// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--skip-optional] [--only N[,M...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "blowup/predictor.hpp"
#include "blowup/profiles.hpp"
#include "blowup/skeleton.hpp"
#include "blowup/solvers.hpp"
#include "oracles.hpp"

using namespace blowup;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

SolverConfig strip(Order order, Nonlinearity nl, double eps) {
  SolverConfig c;
  c.order = order;
  c.nonlinearity = std::move(nl);
  c.eps = eps;
  c.nodes = 2001;
  c.threshold = 10;
  return c;
}

SolverConfig planar(GeometryKind g, double eps) {
  SolverConfig c;
  c.geometry = g;
  c.eps = eps;
  c.nodes = 201;
  c.threshold = 10;
  c.rtol = 1e-5;
  return c;
}

std::string points_str(const std::vector<Coord>& pts, int dim) {
  std::string s;
  for (const auto& p : pts) {
    s += dim == 1 ? fmt::format(" ({:.4f})", p.x())
                  : dim == 2 ? fmt::format(" ({:.4f},{:.4f})", p.x(), p.y())
                             : fmt::format(" ({:.3f},{:.3f},{:.3f})", p.x(), p.y(), p.z());
  }
  return s;
}

// Sample times for the error-order fit: 13 geometric points in [0.01, 0.2].
std::vector<double> fit_times() {
  std::vector<double> t;
  for (int k = 0; k <= 12; ++k) t.push_back(0.01 * std::pow(20.0, k / 12.0));
  return t;
}

// Relative L-inf distance between solver samples and the uniform asymptotic
// solution, regressed in log-log over the fit window.
double error_slope(const BlowupReport& r) {
  ReactionSolution rs(r.config.nonlinearity);
  const auto model = LayerModel::make(r.config.order);
  std::vector<double> x, y;
  for (const auto& s : r.samples) {
    if (s.t > 0.2 + 1e-12) continue;
    double e = 0;
    for (std::size_t i = 0; i < s.field.values.size(); ++i) {
      e = std::max(e, std::abs(s.field.values[i] -
                               uniform_1d(rs, model.base, r.config.eps, s.field.axes[0][i], s.t)));
    }
    x.push_back(std::log(s.t));
    y.push_back(std::log(e / s.field.max_abs()));
  }
  return oracle::slope(x, y);
}

double sample_max(const BlowupReport& r, double t) {
  for (const auto& s : r.samples)
    if (std::abs(s.t - t) < 1e-12) return s.field.max_abs();
  return NAN;
}

// Lazily computed strip runs shared by criteria 3, 4 and 11.
const BlowupReport& run_second_p2() {
  static const BlowupReport r = [] {
    auto c = strip(Order::Second, Nonlinearity::power(2.0), 0.1);
    c.threshold = 1e3;
    c.sample_times = fit_times();
    c.sample_times.push_back(0.4);
    return solve(c);
  }();
  return r;
}

const BlowupReport& run_fourth_exp() {
  static const BlowupReport r = [] {
    auto c = strip(Order::Fourth, Nonlinearity::exponential(), 0.1);
    c.sample_times = fit_times();
    c.sample_times.push_back(0.5);
    return solve(c);
  }();
  return r;
}

Verdict c1() {
  auto c = strip(Order::Fourth, Nonlinearity::exponential(), 0.1);
  c.grading = 1.5;
  const auto r = solve(c);
  const bool ok = r.outcome == Outcome::BlowUp && std::abs(r.T_eps - 0.9779) <= 0.003;
  return {ok, fmt::format("T_eps = {:.6f} (target 0.9779 +- 0.003), {} graded nodes, M = {:g}",
                          r.T_eps, c.nodes, c.threshold)};
}

Verdict c2() {
  const auto a = solve(strip(Order::Fourth, Nonlinearity::exponential(), 1.0 / 5.0));
  const auto b = solve(strip(Order::Fourth, Nonlinearity::exponential(), 1.0 / 7.0));
  const bool one = a.multiplicity() == 1 && std::abs(a.points[0].x()) < 0.02;
  const bool two = b.multiplicity() == 2 &&
                   std::abs(b.points[0].x() + b.points[1].x()) < 1e-3 * std::abs(b.points[1].x());
  return {one && two, fmt::format("eps=1/5: {} point(s){}; eps=1/7: {} point(s){}", a.multiplicity(),
                                  points_str(a.points, 1), b.multiplicity(), points_str(b.points, 1))};
}

Verdict c3() {
  const double a = sample_max(run_second_p2(), 0.4);
  const double b = sample_max(run_fourth_exp(), 0.5);
  const bool ok_a = std::abs(a / 0.446 - 1.0) <= 0.01;
  const bool ok_b = std::abs(b / 0.74 - 1.0) <= 0.02;
  return {ok_a && ok_b,
          fmt::format("second p=2 t=0.4: |u| = {:.5f} (target 0.446 +- 1%) {}; fourth exp t=0.5: "
                      "|u| = {:.5f} (target 0.74 +- 2%) {}",
                      a, ok_a ? "ok" : "MISS", b, ok_b ? "ok" : "MISS")};
}

Verdict c4() {
  const double a = error_slope(run_second_p2());
  const double b = error_slope(run_fourth_exp());
  const bool ok = std::abs(a - 1.0) <= 0.15 && std::abs(b - 1.0) <= 0.15;
  return {ok, fmt::format("slopes: second p=2 {:.4f}, fourth exp {:.4f} (target 1 +- 0.15)", a, b)};
}

Verdict c5() {
  const auto a = solve(planar(GeometryKind::Rect, 0.1));
  const auto b = solve(planar(GeometryKind::Rect, 0.2));
  const double h = 2.0 / 200;
  bool diag = a.multiplicity() == 4;
  for (const auto& p : a.points) diag = diag && std::abs(std::abs(p.x()) - std::abs(p.y())) <= 2 * h;
  const bool origin = b.multiplicity() == 1 && b.points[0].head<2>().norm() <= 2 * h;
  return {diag && origin, fmt::format("eps=0.1: {}{}; eps=0.2: {}{}", a.multiplicity(),
                                      points_str(a.points, 2), b.multiplicity(), points_str(b.points, 2))};
}

Verdict c6() {
  std::string detail;
  bool ok = true;
  for (const auto& [eps, want] : std::vector<std::pair<double, std::size_t>>{{0.05, 4}, {0.1, 2}, {0.2, 1}}) {
    auto c = planar(GeometryKind::Rect, eps);
    c.ymin = 0.0;
    const auto r = solve(c);
    ok = ok && r.multiplicity() == want;
    detail += fmt::format("{}eps={:g}: {} (want {})", detail.empty() ? "" : "; ", eps, r.multiplicity(), want);
  }
  return {ok, detail};
}

Verdict c7() {
  ReactionSolution rs(Nonlinearity::power(2.0));
  const double eta0 = LayerModel::make(Order::Fourth).eta0();
  std::vector<double> e2, rstar;
  std::string detail;
  double gap = NAN;
  for (double eps : {0.05, 0.075, 0.1}) {
    SolverConfig c;
    c.geometry = GeometryKind::RadialDisc;
    c.nonlinearity = rs.nonlinearity();
    c.eps = eps;
    c.nodes = 1000;
    c.threshold = 1e3;
    const auto r = solve(c);
    const double pred = 1.0 - eta0 * rs.gauge(regularized_time(rs, r.T_eps), eps, Order::Fourth);
    e2.push_back(eps * eps);
    rstar.push_back(r.ring_radius);
    if (eps == 0.1) gap = std::abs(r.ring_radius - pred);
    detail += fmt::format("eps={:g}: r*={:.4f} 1-eta0*phi={:.4f} T={:.5f}; ", eps, r.ring_radius, pred, r.T_eps);
  }
  const bool mono = rstar[0] > rstar[1] && rstar[1] > rstar[2];
  detail += fmt::format("|r*-pred| at 0.1 = {:.4f} (<= 0.05 {}), trend in eps^2 {}", gap,
                        gap <= 0.05 ? "ok" : "MISS", mono ? "decreasing" : "NOT decreasing");
  return {mono && gap <= 0.05, detail};
}

Verdict c8() {
  const auto dom = PlanarDomain::parse("polar:1,0.3,0,0,0,0,-0.3");
  const auto p = predict_second_2d(dom, compute_skeleton(dom, 0.01));
  const double d = p.points.size() == 1 ? (p.points[0] - Point(0.3070, -0.0345)).norm() : INFINITY;
  return {d <= 2e-3, fmt::format("{} point(s), first ({:.4f},{:.4f}), distance {:.2e} (<= 2e-3)",
                                 p.points.size(), p.points.empty() ? NAN : p.points[0].x(),
                                 p.points.empty() ? NAN : p.points[0].y(), d)};
}

Verdict c9() {
  const double res = 0.02;
  double disc = 0;
  for (const auto& s : compute_skeleton(PlanarDomain::disc(), res).samples) disc = std::max(disc, s.x.norm());

  const auto sq = compute_skeleton(PlanarDomain::square(), res);
  double fwd = 0, bwd = 0;
  for (const auto& s : sq.samples) fwd = std::max(fwd, oracle::square_skeleton_distance(s.x));
  // Probe points off the sampling lattice.
  for (int i = -45; i < 45; ++i) {
    const double t = (i + 0.37) / 50.0;
    for (const Point q : {Point(t, 0), Point(0, t), Point(t, t), Point(t, -t)}) {
      double best = INFINITY;
      for (const auto& s : sq.samples) best = std::min(best, (s.x - q).norm());
      bwd = std::max(bwd, best);
    }
  }
  const double haus = std::max(fwd, bwd);

  const auto rect = compute_skeleton(PlanarDomain::rectangle(-1, 1, 0, 1), res);
  double junction = 0;
  for (double jx : {-0.5, 0.5}) {
    double best = INFINITY;
    for (const auto& s : rect.samples)
      if (s.medial) best = std::min(best, (s.x - Point(jx, 0.5)).norm());
    junction = std::max(junction, best);
  }
  const bool ok = disc <= res && haus <= 2 * res && junction <= 2 * res;
  return {ok, fmt::format("resolution {}: disc offset {:.4f}, square Hausdorff {:.4f}, rectangle junction "
                          "gap {:.4f}",
                          res, disc, haus, junction)};
}

Verdict c10() {
  double v2res = 0;
  auto d1 = [](double x, double h) {
    return (-v2(x - 3 * h) + 9 * v2(x - 2 * h) - 45 * v2(x - h) + 45 * v2(x + h) - 9 * v2(x + 2 * h) +
            v2(x + 3 * h)) /
           (60 * h);
  };
  auto d2 = [](double x, double h) {
    return (2 * v2(x - 3 * h) - 27 * v2(x - 2 * h) + 270 * v2(x - h) - 490 * v2(x) + 270 * v2(x + h) -
            27 * v2(x + 2 * h) + 2 * v2(x + 3 * h)) /
           (180 * h * h);
  };
  for (int i = 0; i < 500; ++i) {
    const double eta = 0.05 + 9.95 * i / 499.0;
    v2res = std::max(v2res, std::abs(d2(eta, 1e-2) + 0.5 * eta * d1(eta, 1e-2) - v2(eta) + 1.0));
  }

  const auto p = solve_profile4();
  const auto& eta = p.nodes();
  const auto& v = p.column(0);
  const double eta0 = p.peak().eta;
  bool interior = eta0 > 0 && eta0 < p.eta_max() && p.peak().value > 1.0;
  int changes = 0;
  std::vector<double> xs, ys;
  for (std::size_t i = 1; i + 1 < eta.size(); ++i) {
    if (eta[i] >= eta0 && (v[i] - 1.0) * (v[i - 1] - 1.0) < 0.0) ++changes;
    const double w0 = v[i - 1] - 1.0, w1 = v[i] - 1.0, w2 = v[i + 1] - 1.0;
    if (eta[i] >= 10.0 && std::abs(w1) > 1e-12 && (w1 - w0) * (w2 - w1) < 0.0) {
      xs.push_back(std::pow(eta[i], 4.0 / 3.0));
      ys.push_back(std::log(std::abs(w1) * eta[i] * eta[i]));
    }
  }
  const double omega = 3.0 * std::pow(2.0, -11.0 / 3.0);
  const double rate = xs.size() >= 4 ? -oracle::slope(xs, ys) : NAN;
  const double halved = solve_profile4({1.0 / 400.0, 32.0}).peak().eta;
  const double shoot = oracle::Shooting().peak();

  const bool ok = v2res <= 1e-9 && interior && changes >= 3 && std::abs(rate / omega - 1) <= 0.1 &&
                  std::abs(halved - eta0) <= 1e-5 && std::abs(shoot - eta0) <= 1e-4;
  return {ok, fmt::format("v2 residual {:.1e}; eta0 {:.7f}, v(eta0) {:.7f}; {} sign changes; tail rate {:.5f} vs "
                          "{:.5f}; halving shift {:.1e}; shooting eta0 {:.7f}",
                          v2res, eta0, p.peak().value, changes, rate, omega, std::abs(halved - eta0), shoot)};
}

Verdict c11() {
  const auto& a = run_second_p2();
  const auto& b = run_fourth_exp();
  const double T0 = ReactionSolution(Nonlinearity::power(2.0)).T0();
  const bool ok = a.supersolution_excess <= a.config.rtol && a.T_eps >= T0 - 1e-3 && b.T_eps < 1.0;
  return {ok, fmt::format("second p=2: max (u - u0)/max(1,u0) = {:.2e} (step tolerance {:.0e}), T_eps = "
                          "{:.6f} vs T0 = {:.6f}; fourth exp: T_eps = {:.6f} < 1",
                          a.supersolution_excess, a.config.rtol, a.T_eps, T0, b.T_eps)};
}

Verdict c12() {
  std::string detail;
  bool ok = true;
  for (double eps : {0.14, 0.2}) {
    SolverConfig c;
    c.geometry = GeometryKind::Cube;
    c.nonlinearity = Nonlinearity::power(2.0);
    c.eps = eps;
    c.nodes = 41;
    c.threshold = 5e2;
    c.rtol = 1e-5;
    const auto r = solve(c);
    const std::size_t want = eps < 0.15 ? 8 : 1;
    bool orbit = r.multiplicity() == want;
    if (orbit && want == 8) {
      // One orbit of the octahedral group: equal sorted |coordinates|.
      auto key = [](const Coord& p) {
        std::array<double, 3> a = {std::abs(p.x()), std::abs(p.y()), std::abs(p.z())};
        std::sort(a.begin(), a.end());
        return a;
      };
      const auto k0 = key(r.points[0]);
      for (const auto& p : r.points) {
        const auto k = key(p);
        for (int i = 0; i < 3; ++i) orbit = orbit && std::abs(k[i] - k0[i]) <= 0.1;
      }
    }
    if (orbit && want == 1) orbit = r.points[0].norm() <= 0.1;
    ok = ok && orbit;
    detail += fmt::format("{}eps={:g}: {} (want {}){}", detail.empty() ? "" : "; ", eps, r.multiplicity(),
                          want, points_str(r.points, 3));
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_optional = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--skip-optional")) {
      skip_optional = true;
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    }
  }

  struct Criterion {
    int id;
    bool optional;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all = {
      {1, false, "strip blow-up time", c1},
      {2, false, "strip multiplicity transition", c2},
      {3, false, "strip amplitudes", c3},
      {4, false, "error order", c4},
      {5, false, "square multiplicity", c5},
      {6, false, "rectangle multiplicity", c6},
      {7, false, "disc ring", c7},
      {8, false, "potato predictor", c8},
      {9, false, "skeletons", c9},
      {10, false, "profile properties", c10},
      {11, false, "ordering invariants", c11},
      {12, true, "cube multiplicity (optional)", c12},
  };

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    if (c.optional && skip_optional) {
      fmt::print("criterion {:2} SKIP {}\n", c.id, c.name);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("criterion {:2} {} {} [{:.1f} s]: {}\n", c.id, v.pass ? "PASS" : "FAIL", c.name, secs, v.detail);
    std::fflush(stdout);
    if (!v.pass && !c.optional) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
