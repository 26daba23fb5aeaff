#include "blowup/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <tuple>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fftw3.h>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Tensor grid with boundary nodes on every face.
struct Grid {
  std::vector<std::vector<double>> axes;

  int dim() const { return static_cast<int>(axes.size()); }
  int n(int a) const { return static_cast<int>(axes[a].size()); }
  std::size_t total() const {
    std::size_t t = 1;
    for (const auto& ax : axes) t *= ax.size();
    return t;
  }
  std::size_t flat(const std::array<int, 3>& i) const {
    std::size_t k = 0;
    for (int a = dim() - 1; a >= 0; --a) k = k * n(a) + i[a];
    return k;
  }
  std::array<int, 3> split(std::size_t k) const {
    std::array<int, 3> i{0, 0, 0};
    for (int a = 0; a < dim(); ++a) {
      i[a] = static_cast<int>(k % n(a));
      k /= n(a);
    }
    return i;
  }
  bool interior(const std::array<int, 3>& i) const {
    for (int a = 0; a < dim(); ++a)
      if (i[a] <= 0 || i[a] >= n(a) - 1) return false;
    return true;
  }
};

std::vector<double> uniform_axis(double lo, double hi, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
  x.front() = lo;
  x.back() = hi;
  return x;
}

// Nodes x = tanh(g xi) / tanh(g) for uniform xi in [-1, 1].
std::vector<double> graded_axis(int n, double g) {
  if (g <= 0.0) return uniform_axis(-1.0, 1.0, n);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    const double xi = -1.0 + 2.0 * i / (n - 1);
    x[i] = std::tanh(g * xi) / std::tanh(g);
  }
  x.front() = -1.0;
  x.back() = 1.0;
  // Exact mirror symmetry of the node set.
  for (int i = 0; i < n / 2; ++i) x[n - 1 - i] = -x[i];
  if (n % 2) x[n / 2] = 0.0;
  return x;
}

// Maps grid nodes to unknown indices (interior nodes only).
struct Numbering {
  std::vector<long> id;  // -1 on the boundary
  std::vector<std::size_t> node;
};

Numbering number_interior(const Grid& g) {
  Numbering num;
  num.id.assign(g.total(), -1);
  for (std::size_t k = 0; k < g.total(); ++k) {
    if (g.interior(g.split(k))) {
      num.id[k] = static_cast<long>(num.node.size());
      num.node.push_back(k);
    }
  }
  return num;
}

// Three-point second difference weights at node i of a possibly graded axis.
std::array<double, 3> second_difference(const std::vector<double>& x, int i) {
  const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
  const double c = 2.0 / (hl + hr);
  return {c / hl, -c * (1.0 / hl + 1.0 / hr), c / hr};
}

// Laplacian rows for the interior nodes, acting on all grid nodes.
SpMat laplacian_rows(const Grid& g, const Numbering& num) {
  Triplets t;
  for (std::size_t r = 0; r < num.node.size(); ++r) {
    const auto i = g.split(num.node[r]);
    for (int a = 0; a < g.dim(); ++a) {
      const auto w = second_difference(g.axes[a], i[a]);
      for (int s = -1; s <= 1; ++s) {
        auto j = i;
        j[a] += s;
        t.emplace_back(static_cast<int>(r), static_cast<int>(g.flat(j)), w[s + 1]);
      }
    }
  }
  SpMat m(static_cast<long>(num.node.size()), static_cast<long>(g.total()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Laplacian of u at every node, from the interior unknowns. Boundary values
// use a mirrored ghost node (u_ghost = u_inner), which enforces the clamped
// condition du/dn = 0 alongside u = 0.
SpMat clamped_laplacian(const Grid& g, const Numbering& num) {
  Triplets t;
  for (std::size_t k = 0; k < g.total(); ++k) {
    const auto i = g.split(k);
    if (num.id[k] >= 0) {
      for (int a = 0; a < g.dim(); ++a) {
        const auto w = second_difference(g.axes[a], i[a]);
        for (int s = -1; s <= 1; ++s) {
          auto j = i;
          j[a] += s;
          const long c = num.id[g.flat(j)];
          if (c >= 0) t.emplace_back(static_cast<int>(k), static_cast<int>(c), w[s + 1]);
        }
      }
      continue;
    }
    for (int a = 0; a < g.dim(); ++a) {
      if (i[a] != 0 && i[a] != g.n(a) - 1) continue;
      auto j = i;
      j[a] += i[a] == 0 ? 1 : -1;
      const long c = num.id[g.flat(j)];
      if (c < 0) continue;
      const double h = std::abs(g.axes[a][j[a]] - g.axes[a][i[a]]);
      t.emplace_back(static_cast<int>(k), static_cast<int>(c), 2.0 / (h * h));
    }
  }
  SpMat m(static_cast<long>(g.total()), static_cast<long>(num.node.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Linear part L of u_t = L u + f(u) on the interior unknowns.
SpMat tensor_operator(const Grid& g, const Numbering& num, Order order, double eps) {
  const SpMat rows = laplacian_rows(g, num);
  SpMat L;
  if (order == Order::Second) {
    // Dirichlet: boundary columns drop out.
    Triplets t;
    for (int c = 0; c < rows.outerSize(); ++c)
      for (SpMat::InnerIterator it(rows, c); it; ++it)
        if (num.id[it.col()] >= 0)
          t.emplace_back(static_cast<int>(it.row()), static_cast<int>(num.id[it.col()]), it.value());
    L.resize(rows.rows(), rows.rows());
    L.setFromTriplets(t.begin(), t.end());
    L *= eps * eps;
  } else {
    L = SpMat(rows * clamped_laplacian(g, num));
    L *= -std::pow(eps, 4);
  }
  L.makeCompressed();
  return L;
}

// Radial cells r_i = (i + 1/2) h, i < n, with the wall at r_n = 1.
SpMat radial_operator(int n, Order order, double eps) {
  const double h = 1.0 / (n + 0.5);
  auto r = [&](double i) { return (i + 0.5) * h; };
  // Conservative radial Laplacian on cells 0..n-1; the flux through r = 0 vanishes.
  auto lap = [&](int i, auto&& add) {
    const double rl = i == 0 ? 0.0 : r(i - 0.5), rr = r(i + 0.5), s = 1.0 / (r(i) * h * h);
    if (i > 0) add(i - 1, s * rl);
    add(i, -s * (rl + rr));
    add(i + 1, s * rr);
  };
  Triplets rows;  // n x (n + 1): cells plus the wall node
  for (int i = 0; i < n; ++i) lap(i, [&](int j, double w) { rows.emplace_back(i, j, w); });
  SpMat R(n, n + 1);
  R.setFromTriplets(rows.begin(), rows.end());
  SpMat L;
  if (order == Order::Second) {
    L = R.leftCols(n);
    L *= eps * eps;
  } else {
    // Laplacian at the wall with the mirrored ghost: 2 u_{n-1} / h^2.
    Triplets g;
    for (int i = 0; i < n; ++i) lap(i, [&](int j, double w) {
        if (j < n) g.emplace_back(i, j, w);
      });
    g.emplace_back(n, n - 1, 2.0 / (h * h));
    SpMat G(n + 1, n);
    G.setFromTriplets(g.begin(), g.end());
    L = SpMat(R * G);
    L *= -std::pow(eps, 4);
  }
  L.makeCompressed();
  return L;
}

// Diagonalizes the Dirichlet (bi-)Laplacian of a uniform tensor grid with a
// type-I sine transform along every axis.
class SineTransform {
 public:
  SineTransform(std::vector<int> sizes, std::vector<double> spacing, Order order, double eps)
      : sizes_(std::move(sizes)), order_(order), eps_(eps) {
    total_ = 1;
    for (int n : sizes_) total_ *= n;
    // -Laplacian eigenvalues summed over axes, x fastest.
    lambda_.assign(total_, 0.0);
    for (std::size_t k = 0; k < total_; ++k) {
      std::size_t r = k;
      for (std::size_t a = 0; a < sizes_.size(); ++a) {
        const int n = sizes_[a], i = static_cast<int>(r % n) + 1;
        r /= n;
        const double s = std::sin(std::numbers::pi * i / (2.0 * (n + 1)));
        lambda_[k] += 4.0 * s * s / (spacing[a] * spacing[a]);
      }
    }
    norm_ = 1.0;
    for (int n : sizes_) norm_ *= 2.0 * (n + 1);
    std::vector<int> dims(sizes_.rbegin(), sizes_.rend());
    std::vector<fftw_r2r_kind> kinds(dims.size(), FFTW_RODFT00);
    std::vector<double> buf(total_);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_r2r(static_cast<int>(dims.size()), dims.data(), buf.data(), buf.data(),
                          kinds.data(), FFTW_ESTIMATE);
  }
  ~SineTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  SineTransform(const SineTransform&) = delete;
  SineTransform& operator=(const SineTransform&) = delete;

  // Applies (shift + dt * operator)^-1.
  void solve(double dt, double shift, Vec& x) const {
    fftw_execute_r2r(plan_, x.data(), x.data());
    const double e = order_ == Order::Second ? eps_ * eps_ : std::pow(eps_, 4);
    for (std::size_t k = 0; k < total_; ++k) {
      const double op = order_ == Order::Second ? lambda_[k] : lambda_[k] * lambda_[k];
      x[k] /= norm_ * (shift + dt * e * op);
    }
    fftw_execute_r2r(plan_, x.data(), x.data());
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::vector<int> sizes_;
  Order order_;
  double eps_;
  std::size_t total_ = 0;
  std::vector<double> lambda_;
  double norm_ = 1.0;
  fftw_plan plan_ = nullptr;
};

// Solves (I - dt J) k = rhs with J = L + diag(f'(u)): sparse LU for banded
// one-dimensional problems, conjugate gradients preconditioned by the sine
// transform otherwise.
// Fast-Poisson preconditioner for conjugate gradients: the step operator with the
// reaction term replaced by its mean, inverted in the sine basis.
class SinePreconditioner {
 public:
  void set(const SineTransform* sine, double dt, double shift) {
    sine_ = sine;
    dt_ = dt;
    shift_ = shift;
  }
  template <class M>
  SinePreconditioner& analyzePattern(const M&) { return *this; }
  template <class M>
  SinePreconditioner& factorize(const M&) { return *this; }
  template <class M>
  SinePreconditioner& compute(const M&) { return *this; }
  Vec solve(const Vec& b) const {
    Vec r = b;
    sine_->solve(dt_, shift_, r);
    return r;
  }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  const SineTransform* sine_ = nullptr;
  double dt_ = 0.0, shift_ = 1.0;
};

class StepSolver {
 public:
  StepSolver(const SpMat& L, const SineTransform* sine) : L_(L), sine_(sine) {
    I_.resize(L.rows(), L.cols());
    I_.setIdentity();
  }

  Vec solve(double dt, const Vec& fp, const Vec& rhs) {
    Vec k = sine_ ? pcg(dt, fp, rhs) : direct(dt, fp, rhs);
    if (!k.allFinite()) throw ConvergenceError("non-finite implicit update");
    return k;
  }

 private:
  Vec direct(double dt, const Vec& fp, const Vec& rhs) {
    SpMat M = I_ - dt * L_;
    for (long i = 0; i < M.rows(); ++i) M.coeffRef(i, i) -= dt * fp[i];
    M.makeCompressed();
    if (!pattern_) {
      lu_.analyzePattern(M);
      pattern_ = true;
    }
    lu_.factorize(M);
    if (lu_.info() != Eigen::Success) throw ConvergenceError("sparse LU factorization failed");
    return lu_.solve(rhs);
  }

  Vec pcg(double dt, const Vec& fp, const Vec& rhs) {
    if (rhs.norm() == 0.0) return Vec::Zero(rhs.size());
    SpMat M = I_ - dt * L_;
    for (long i = 0; i < M.rows(); ++i) M.coeffRef(i, i) -= dt * fp[i];
    M.makeCompressed();
    cg_.setTolerance(kTolerance);
    cg_.setMaxIterations(kMaxIterations);
    cg_.compute(M);
    cg_.preconditioner().set(sine_, dt, 1.0 - dt * fp.mean());
    Vec x = cg_.solve(rhs);
    if (cg_.info() != Eigen::Success) {
      throw ConvergenceError(fmt::format("conjugate gradients: residual {:.3g} after {} iterations",
                                         cg_.error(), cg_.iterations()));
    }
    return x;
  }

  static constexpr int kMaxIterations = 2000;
  static constexpr double kTolerance = 1e-13;

  const SpMat& L_;
  const SineTransform* sine_;
  SpMat I_;
  bool pattern_ = false;
  Eigen::SparseLU<SpMat> lu_;
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, SinePreconditioner> cg_;
};

// Running association of per-snapshot maxima into tracks.
class PeakTracker {
 public:
  PeakTracker(double fraction, double separation) : fraction_(fraction), separation_(separation) {}

  void add(double t, const Field& field) {
    const auto pts = extract_singularities(field, fraction_, separation_);
    std::vector<int> ids(pts.size(), -1);
    std::vector<bool> used(last_.size(), false);
    // Greedy nearest pairs, closest first.
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = 0; b < last_.size(); ++b)
        pairs.emplace_back((pts[a] - last_[b].second).norm(), a, b);
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [d, a, b] : pairs) {
      if (ids[a] >= 0 || used[b]) continue;
      ids[a] = last_[b].first;
      used[b] = true;
    }
    std::vector<std::pair<int, Coord>> next;
    for (std::size_t a = 0; a < pts.size(); ++a) {
      if (ids[a] < 0) ids[a] = next_id_++;
      next.emplace_back(ids[a], pts[a]);
      out_.push_back({t, ids[a], pts[a], field_value_near(field, pts[a])});
    }
    last_ = std::move(next);
  }

  std::vector<TrackPoint> take() { return std::move(out_); }

 private:
  static double field_value_near(const Field& f, const Coord& x) {
    double best = INFINITY, v = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      const double d = (f.coord(k) - x).squaredNorm();
      if (d < best) best = d, v = f.values[k];
    }
    return v;
  }

  double fraction_, separation_;
  std::vector<std::pair<int, Coord>> last_;
  std::vector<TrackPoint> out_;
  int next_id_ = 0;
};

// Problem-specific pieces handed to the integrator.
struct Discretization {
  SpMat L;
  /// Set on uniform grids of dimension >= 2.
  std::unique_ptr<SineTransform> sine;
  std::function<Field(const Vec&)> field;
};

double max_abs(const Vec& u) { return u.size() ? u.cwiseAbs().maxCoeff() : 0.0; }

BlowupReport integrate(const SolverConfig& cfg, const Discretization& disc) {
  const ReactionSolution rs(cfg.nonlinearity);
  const Nonlinearity& f = cfg.nonlinearity;
  const long n = disc.L.rows();

  BlowupReport rep;
  rep.config = cfg;

  Vec u = Vec::Zero(n);
  if (cfg.noise > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U(-cfg.noise, cfg.noise);
    for (long i = 0; i < n; ++i) u[i] = U(rng);
  }

  auto F = [&](const Vec& v) {
    Vec r = disc.L * v;
    for (long i = 0; i < n; ++i) r[i] += f(v[i]);
    return r;
  };
  auto Fp = [&](const Vec& v) {
    Vec r(n);
    for (long i = 0; i < n; ++i) r[i] = f.derivative(v[i]);
    return r;
  };

  StepSolver solver(disc.L, disc.sine.get());
  auto euler = [&](const Vec& v, double dt) -> Vec { return v + solver.solve(dt, Fp(v), dt * F(v)); };

  std::vector<double> samples = cfg.sample_times;
  std::sort(samples.begin(), samples.end());
  std::size_t next_sample = 0;
  const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 10.0 * rs.T0();

  PeakTracker tracker(cfg.peak_fraction, cfg.peak_separation);
  double t = 0.0, dt = cfg.dt_initial, umax = max_abs(u);
  double dt_err = dt;
  double z = 0.0;
  rep.outcome = Outcome::NoBlowUp;

  while (true) {
    if (umax >= cfg.threshold) {
      rep.outcome = Outcome::BlowUp;
      break;
    }
    if (t >= t_max) {
      rep.message = fmt::format("no blow-up detected: |u|_inf = {:.6g} at t = {:.6g}", umax, t);
      break;
    }
    if (rep.steps >= cfg.max_steps) {
      rep.message = fmt::format("no blow-up detected within {} steps (|u|_inf = {:.6g})",
                                cfg.max_steps, umax);
      break;
    }
    // Growth bound from the largest reaction rate.
    double fmax = 0.0;
    for (long i = 0; i < n; ++i) fmax = std::max(fmax, f(u[i]));
    dt = std::min(dt_err, cfg.growth * std::max(umax, 1.0) / fmax);
    bool to_sample = false;
    if (next_sample < samples.size() && t + dt >= samples[next_sample]) {
      dt = samples[next_sample] - t;
      to_sample = true;
    }
    bool to_end = false;
    if (t + dt >= t_max && !(to_sample && samples[next_sample] <= t_max)) {
      dt = t_max - t;
      to_sample = false;
      to_end = true;
    }
    if (dt < cfg.dt_min) {
      rep.message = fmt::format("no blow-up detected: step size fell below {:.3g} at t = {:.6g}",
                                cfg.dt_min, t);
      break;
    }

    const Vec full = euler(u, dt);
    const Vec half = euler(euler(u, 0.5 * dt), 0.5 * dt);
    // The uniform state advanced by the same scheme and step.
    auto zstep = [&](double v, double h) { return v + h * f(v) / (1.0 - h * f.derivative(v)); };
    const double z_next = 2.0 * zstep(zstep(z, 0.5 * dt), 0.5 * dt) - zstep(z, dt);
    const double scale = std::max(1.0, max_abs(half));
    const double err = max_abs(half - full) / scale;
    if (!(err <= cfg.rtol)) {
      if (!std::isfinite(err)) throw ConvergenceError("non-finite step error estimate");
      dt_err = dt * std::max(0.2, cfg.safety * std::sqrt(cfg.rtol / err));
      ++rep.rejected;
      continue;
    }
    u = 2.0 * half - full;
    z = z_next;
    t = to_sample ? samples[next_sample] : to_end ? t_max : t + dt;
    umax = max_abs(u);
    ++rep.steps;
    dt_err = dt * std::min(2.0, cfg.safety * std::sqrt(cfg.rtol / std::max(err, 1e-300)));
    if (to_sample) dt_err = std::max(dt_err, cfg.dt_initial);
    rep.dt_history.push_back(dt);
    rep.t_history.push_back(t);
    rep.umax_history.push_back(umax);

    if (cfg.order == Order::Second) {
      rep.supersolution_excess =
          std::max(rep.supersolution_excess, (u.maxCoeff() - z) / std::max(1.0, z));
    }
    if (to_sample) {
      rep.samples.push_back({t, disc.field(u)});
      while (next_sample < samples.size() && samples[next_sample] <= t) ++next_sample;
    }
    if (cfg.snapshot_stride > 0 && rep.steps % cfg.snapshot_stride == 0) {
      Field fld = disc.field(u);
      tracker.add(t, fld);
      if (cfg.keep_snapshots) rep.snapshots.push_back({t, std::move(fld)});
    }
  }

  rep.t_stop = t;
  rep.u_max = umax;
  rep.final_field = disc.field(u);
  rep.trajectory = tracker.take();
  if (rep.outcome == Outcome::BlowUp) {
    rep.T_eps = t + reaction_tail(rs, umax);
    rep.message = fmt::format("blow-up: |u|_inf = {:.6g} at t = {:.10g}", umax, t);
  } else {
    rep.T_eps = std::numeric_limits<double>::infinity();
  }
  return rep;
}

Field tensor_field(const Grid& g, const Numbering& num, const Vec& u) {
  Field fld;
  fld.axes = g.axes;
  fld.values.assign(g.total(), 0.0);
  for (std::size_t r = 0; r < num.node.size(); ++r) fld.values[num.node[r]] = u[r];
  return fld;
}

BlowupReport solve_tensor(const SolverConfig& cfg, Grid g) {
  std::size_t unknowns = 1;
  for (const auto& ax : g.axes) unknowns *= ax.size() - 2;
  if (static_cast<long>(unknowns) > cfg.max_unknowns) {
    throw ConfigError(fmt::format("grid has {} unknowns, above the limit {}", unknowns,
                                  cfg.max_unknowns));
  }
  const auto num = number_interior(g);
  Discretization disc;
  disc.L = tensor_operator(g, num, cfg.order, cfg.eps);
  if (g.dim() > 1) {
    std::vector<int> sizes;
    std::vector<double> spacing;
    for (const auto& ax : g.axes) {
      sizes.push_back(static_cast<int>(ax.size()) - 2);
      spacing.push_back(ax[1] - ax[0]);
    }
    disc.sine = std::make_unique<SineTransform>(sizes, spacing, cfg.order, cfg.eps);
  }
  disc.field = [&](const Vec& u) { return tensor_field(g, num, u); };
  auto rep = integrate(cfg, disc);
  rep.points = extract_singularities(rep.final_field, cfg.peak_fraction, cfg.peak_separation);
  return rep;
}

int nodes_for(int requested, double length, double h) {
  if (requested > 0) return requested;
  return static_cast<int>(std::lround(length / h)) + 1;
}

}  // namespace

const char* geometry_name(GeometryKind g) {
  switch (g) {
    case GeometryKind::Strip: return "strip";
    case GeometryKind::Rect: return "rect";
    case GeometryKind::RadialDisc: return "radial_disc";
    case GeometryKind::Cube: return "cube";
  }
  return "?";
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw ConfigError(fmt::format("{}: {}", key, msg), -1, key);
  };
  if (!(eps >= 0.0)) fail("eps", "must be non-negative");
  if (nodes < 5) fail("nodes", "need at least 5 nodes");
  if (nodes_y != 0 && nodes_y < 5) fail("nodes_y", "need at least 5 nodes");
  if (nodes_z != 0 && nodes_z < 5) fail("nodes_z", "need at least 5 nodes");
  if (!(xmax > xmin) || !(ymax > ymin)) fail("geometry", "empty extent");
  if (grading < 0.0) fail("grading", "must be non-negative");
  if (!(dt_initial > 0.0)) fail("dt", "must be positive");
  if (!(dt_min > 0.0) || !(dt_min < dt_initial)) fail("dt_min", "must lie in (0, dt)");
  if (!(safety > 0.0 && safety <= 1.0)) fail("safety", "must lie in (0, 1]");
  if (!(rtol > 0.0)) fail("rtol", "must be positive");
  if (!(growth > 0.0)) fail("growth", "must be positive");
  if (!(threshold > 1.0)) fail("threshold", "M must exceed 1");
  if (max_steps <= 0) fail("max_steps", "must be positive");
  if (noise < 0.0) fail("noise", "must be non-negative");
  if (!(peak_fraction > 0.0 && peak_fraction <= 1.0)) fail("peak_fraction", "must lie in (0, 1]");
  if (!(peak_separation > 0.0)) fail("peak_separation", "must be positive");
  for (double s : sample_times)
    if (!(s > 0.0)) fail("sample_times", "must be positive");
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

Coord Field::coord(std::size_t index) const {
  Coord c = Coord::Zero();
  for (int a = 0; a < dim(); ++a) {
    const std::size_t n = axes[a].size();
    c[a] = axes[a][index % n];
    index /= n;
  }
  return c;
}

double reaction_tail(const ReactionSolution& rs, double U) {
  const auto& f = rs.nonlinearity();
  switch (f.kind()) {
    case Nonlinearity::Kind::Exponential: return std::exp(-U);
    case Nonlinearity::Kind::Power: {
      const double p = f.exponent();
      return std::pow(1.0 + U, 1.0 - p) / (p - 1.0);
    }
    case Nonlinearity::Kind::Custom: break;
  }
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double v) { return 1.0 / f(U + v); });
}

BlowupReport solve_1d(const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.geometry != GeometryKind::Strip) throw ConfigError("solve_1d needs the strip geometry");
  Grid g{{graded_axis(cfg.nodes, cfg.grading)}};
  return solve_tensor(cfg, std::move(g));
}

BlowupReport solve_rect2d(const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.geometry != GeometryKind::Rect) throw ConfigError("solve_rect2d needs a rectangle");
  const double h = (cfg.xmax - cfg.xmin) / (cfg.nodes - 1);
  Grid g{{uniform_axis(cfg.xmin, cfg.xmax, cfg.nodes),
          uniform_axis(cfg.ymin, cfg.ymax, nodes_for(cfg.nodes_y, cfg.ymax - cfg.ymin, h))}};
  return solve_tensor(cfg, std::move(g));
}

BlowupReport solve_cube3d(const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.geometry != GeometryKind::Cube) throw ConfigError("solve_cube3d needs the cube");
  const auto ax = uniform_axis(-1.0, 1.0, cfg.nodes);
  Grid g{{ax, ax, ax}};
  return solve_tensor(cfg, std::move(g));
}

BlowupReport solve_radial_disc(const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.geometry != GeometryKind::RadialDisc) throw ConfigError("solve_radial_disc needs the disc");
  const int n = cfg.nodes;
  const double h = 1.0 / (n + 0.5);
  std::vector<double> r(n + 1);
  for (int i = 0; i <= n; ++i) r[i] = (i + 0.5) * h;
  r[n] = 1.0;

  Discretization disc;
  disc.L = radial_operator(n, cfg.order, cfg.eps);
  disc.field = [&](const Vec& u) {
    Field fld;
    fld.radial = true;
    fld.axes = {r};
    fld.values.assign(n + 1, 0.0);
    for (int i = 0; i < n; ++i) fld.values[i] = u[i];
    return fld;
  };
  auto rep = integrate(cfg, disc);

  const auto& v = rep.final_field.values;
  const int k = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  double rstar = 0.0;
  if (k > 0 && k < n) {
    // Vertex of the parabola through the three cells around the maximum.
    const double a = v[k - 1], b = v[k], c = v[k + 1];
    const double den = a - 2 * b + c;
    const double off = den < 0.0 ? 0.5 * (a - c) / den : 0.0;
    rstar = r[k] + std::clamp(off, -0.5, 0.5) * h;
  }
  rep.ring_radius = rstar;
  rep.points = {Coord(rstar, 0.0, 0.0)};
  return rep;
}

BlowupReport solve(const SolverConfig& cfg) {
  switch (cfg.geometry) {
    case GeometryKind::Strip: return solve_1d(cfg);
    case GeometryKind::Rect: return solve_rect2d(cfg);
    case GeometryKind::RadialDisc: return solve_radial_disc(cfg);
    case GeometryKind::Cube: return solve_cube3d(cfg);
  }
  throw ConfigError("unknown geometry");
}

std::vector<Coord> extract_singularities(const Field& field, double threshold_fraction,
                                         double separation) {
  const int d = field.dim();
  std::array<int, 3> n{1, 1, 1};
  for (int a = 0; a < d; ++a) n[a] = static_cast<int>(field.size(a));
  auto at = [&](int i, int j, int k) { return field.values[i + n[0] * (j + n[1] * k)]; };
  const double level = threshold_fraction * field.max_abs();

  double hmax = 0.0;
  for (int a = 0; a < d; ++a)
    for (std::size_t i = 1; i < field.size(a); ++i)
      hmax = std::max(hmax, field.axes[a][i] - field.axes[a][i - 1]);

  struct Cand {
    double value;
    Coord x;
  };
  std::vector<Cand> cands;
  const int kz = d > 2 ? 1 : 0, ky = d > 1 ? 1 : 0;
  for (int k = kz; k < n[2] - kz; ++k)
    for (int j = ky; j < n[1] - ky; ++j)
      for (int i = 1; i < n[0] - 1; ++i) {
        const double v = at(i, j, k);
        if (v < level || v <= 0.0) continue;
        bool peak = true;
        for (int dk = -kz; dk <= kz && peak; ++dk)
          for (int dj = -ky; dj <= ky && peak; ++dj)
            for (int di = -1; di <= 1 && peak; ++di) {
              if (!di && !dj && !dk) continue;
              if (at(i + di, j + dj, k + dk) >= v) peak = false;
            }
        if (!peak) continue;
        Coord x = Coord::Zero();
        const std::array<int, 3> idx{i, j, k};
        for (int a = 0; a < d; ++a) {
          std::array<int, 3> lo = idx, hi = idx;
          --lo[a];
          ++hi[a];
          const auto& ax = field.axes[a];
          const double x0 = ax[idx[a] - 1], x1 = ax[idx[a]], x2 = ax[idx[a] + 1];
          const double f0 = at(lo[0], lo[1], lo[2]), f2 = at(hi[0], hi[1], hi[2]);
          // Vertex of the interpolating parabola.
          const double d1 = (v - f0) / (x1 - x0), d2 = (f2 - v) / (x2 - x1);
          const double c2 = (d2 - d1) / (x2 - x0);
          double xv = x1;
          if (c2 < 0.0) xv = 0.5 * (x0 + x1) - d1 / (2.0 * c2);
          x[a] = std::clamp(xv, x0, x2);
        }
        cands.push_back({v, x});
      }

  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.value > b.value; });
  std::vector<Coord> kept;
  for (const auto& c : cands) {
    bool near = false;
    for (const auto& k : kept) near = near || (k - c.x).norm() < separation * hmax;
    if (!near) kept.push_back(c.x);
  }
  std::sort(kept.begin(), kept.end(), [](const Coord& a, const Coord& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  return kept;
}

std::vector<TrackPoint> track_peaks(const std::vector<Sample>& history, double threshold_fraction,
                                    double separation) {
  PeakTracker tracker(threshold_fraction, separation);
  for (const auto& s : history) tracker.add(s.t, s.field);
  return tracker.take();
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrackPoint>& trajectory) {
  os << "t,track,x,y,z,value\n";
  for (const auto& p : trajectory) {
    fmt::print(os, "{:.12g},{},{:.12g},{:.12g},{:.12g},{:.12g}\n", p.t, p.track, p.x[0], p.x[1],
               p.x[2], p.value);
  }
}

void write_singularities_csv(std::ostream& os, const BlowupReport& report) {
  os << "index,x,y,z\n";
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& p = report.points[i];
    fmt::print(os, "{},{:.12g},{:.12g},{:.12g}\n", i, p[0], p[1], p[2]);
  }
}

void write_field_csv(std::ostream& os, const Field& field) {
  static const char* names[] = {"x", "y", "z"};
  if (field.radial) {
    os << "r,u\n";
  } else {
    for (int a = 0; a < field.dim(); ++a) os << names[a] << ',';
    os << "u\n";
  }
  for (std::size_t k = 0; k < field.values.size(); ++k) {
    const Coord c = field.coord(k);
    for (int a = 0; a < field.dim(); ++a) fmt::print(os, "{:.10g},", c[a]);
    fmt::print(os, "{:.12g}\n", field.values[k]);
  }
}

void write_report_summary(std::ostream& os, const BlowupReport& r) {
  fmt::print(os, "outcome: {}\n", r.outcome == Outcome::BlowUp ? "blow-up" : "no-blow-up");
  fmt::print(os, "message: \"{}\"\n", r.message);
  fmt::print(os, "T_eps: {:.12g}\n", r.T_eps);
  fmt::print(os, "t_stop: {:.12g}\n", r.t_stop);
  fmt::print(os, "u_max: {:.12g}\n", r.u_max);
  fmt::print(os, "multiplicity: {}\n", r.multiplicity());
  if (r.config.geometry == GeometryKind::RadialDisc) fmt::print(os, "ring_radius: {:.12g}\n", r.ring_radius);
  fmt::print(os, "steps: {}\n", r.steps);
  fmt::print(os, "rejected: {}\n", r.rejected);
  if (r.config.order == Order::Second) {
    fmt::print(os, "supersolution_excess: {:.6g}\n", r.supersolution_excess);
  }
}

}  // namespace blowup
