#include "blowup/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "blowup/bvp.hpp"
#include "blowup/errors.hpp"

namespace blowup {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;  // 1/sqrt(pi)
constexpr double kEtaSwitch = 26.0;
constexpr double kResidualTol = 1e-9;

// Locates the mesh interval containing eta on a uniform grid.
std::size_t interval_of(const std::vector<double>& eta, double x) {
  const double h = eta[1] - eta[0];
  const auto last = eta.size() - 2;
  const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(x / h)));
  return std::min(i, last);
}

double hermite_column(const std::vector<double>& eta, const std::vector<std::vector<double>>& cols,
                      int k, double x) {
  const std::size_t i = interval_of(eta, x);
  const double h = eta[i + 1] - eta[i];
  const double left[3] = {cols[k][i], cols[k + 1][i], cols[k + 2][i]};
  const double right[3] = {cols[k][i + 1], cols[k + 1][i + 1], cols[k + 2][i + 1]};
  return hermite5(eta[i], h, left, right, x, 0);
}

// Derivatives of Im(A e^{i theta} e^{c eta^{4/3}}), c = (-1 + i sqrt 3) w.
double tail_derivative(const TailFit& tail, double eta, int k) {
  using cd = std::complex<double>;
  const cd c = cd(-1.0, std::sqrt(3.0)) * tail.rate;
  const double s = std::pow(eta, 4.0 / 3.0);
  const cd z = tail.amplitude * std::exp(cd(0.0, tail.phase) + c * s);
  const double s1 = 4.0 / 3.0 * std::cbrt(eta);
  const double s2 = 4.0 / 9.0 * std::pow(eta, -2.0 / 3.0);
  const double s3 = -8.0 / 27.0 * std::pow(eta, -5.0 / 3.0);
  cd factor;
  switch (k) {
    case 0: return 1.0 + z.imag();
    case 1: factor = c * s1; break;
    case 2: factor = c * s2 + (c * s1) * (c * s1); break;
    default: factor = c * s3 + 3.0 * c * c * s1 * s2 + (c * s1) * (c * s1) * (c * s1); break;
  }
  return (factor * z).imag();
}

ProfilePeak extract_peak(const std::vector<double>& eta, const std::vector<double>& v) {
  const auto imax = static_cast<std::size_t>(
      std::distance(v.begin(), std::max_element(v.begin(), v.end())));
  if (imax < 2 || imax + 2 >= v.size() || !(v[imax] > 1.0)) {
    throw ConvergenceError("fourth-order profile: maximum is not interior");
  }
  // Quartic through the five nodes around the maximal node, in s = (eta - eta_i)/h.
  const double h = eta[1] - eta[0];
  Eigen::Matrix<double, 5, 5> vand;
  Eigen::Matrix<double, 5, 1> rhs;
  for (int r = 0; r < 5; ++r) {
    const double s = r - 2.0;
    for (int c = 0; c < 5; ++c) vand(r, c) = std::pow(s, c);
    rhs(r) = v[imax - 2 + r];
  }
  const Eigen::Matrix<double, 5, 1> cf = vand.fullPivLu().solve(rhs);
  double s = 0.0;
  for (int it = 0; it < 50; ++it) {
    const double d1 = cf(1) + 2 * cf(2) * s + 3 * cf(3) * s * s + 4 * cf(4) * s * s * s;
    const double d2 = 2 * cf(2) + 6 * cf(3) * s + 12 * cf(4) * s * s;
    const double ds = d1 / d2;
    s -= ds;
    if (std::abs(ds) < 1e-15) break;
  }
  if (!(std::abs(s) <= 1.0)) throw ConvergenceError("fourth-order profile: peak fit diverged");
  const double val = cf(0) + s * (cf(1) + s * (cf(2) + s * (cf(3) + s * cf(4))));
  return {eta[imax] + s * h, val};
}

// Least squares for (v - 1) e^{w s} = a sin(sqrt3 w s) + b cos(sqrt3 w s) over
// the window [eta_max/2, 3 eta_max/4].
TailFit fit_tail(const std::vector<double>& eta, const std::vector<double>& v) {
  const double eta_max = eta.back();
  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i] < 0.5 * eta_max || eta[i] > 0.75 * eta_max) continue;
    const double s = std::pow(eta[i], 4.0 / 3.0);
    const double y = (v[i] - 1.0) * std::exp(kTailRate * s);
    const Eigen::Vector2d basis(std::sin(std::sqrt(3.0) * kTailRate * s),
                                std::cos(std::sqrt(3.0) * kTailRate * s));
    normal += basis * basis.transpose();
    rhs += basis * y;
  }
  const Eigen::Vector2d ab = normal.ldlt().solve(rhs);
  return {std::hypot(ab(0), ab(1)), std::atan2(ab(1), ab(0)), kTailRate};
}

}  // namespace

// ---------------------------------------------------------------------------
// Second-order closed form

double v2(double eta) {
  if (eta < 0.0) throw DomainError(fmt::format("v2 requires eta >= 0, got {}", eta));
  if (eta > kEtaSwitch) return v2_tail(eta);
  const double e = std::exp(-0.25 * eta * eta);
  // 1 - e^{-eta^2/4} [ -eta/sqrt(pi) + (1 + eta^2/2) e^{eta^2/4} erfc(eta/2) ], with
  // the exponentials recombined so nothing overflows below the switch point.
  return 1.0 - ((1.0 + 0.5 * eta * eta) * std::erfc(0.5 * eta) - eta * kInvSqrtPi * e);
}

double v2_derivative(double eta, int k) {
  if (eta < 0.0) throw DomainError(fmt::format("v2 requires eta >= 0, got {}", eta));
  const double e = std::exp(-0.25 * eta * eta);
  switch (k) {
    case 0: return v2(eta);
    case 1: return 2.0 * kInvSqrtPi * e - eta * std::erfc(0.5 * eta);
    case 2: return -std::erfc(0.5 * eta);
    case 3: return kInvSqrtPi * e;
    default: throw DomainError("v2 derivatives are available up to order 3");
  }
}

double v2_tail(double eta) {
  if (eta < 5.0) throw DomainError(fmt::format("v2_tail requires eta >= 5, got {}", eta));
  return 1.0 - 8.0 * kInvSqrtPi / (eta * eta * eta) * std::exp(-0.25 * eta * eta);
}

// ---------------------------------------------------------------------------
// LayerProfile

LayerProfile LayerProfile::second_order() { return LayerProfile{}; }

LayerProfile LayerProfile::fourth_order_table(std::vector<double> eta,
                                              std::vector<std::vector<double>> columns,
                                              TailFit tail, ProfilePeak peak, double residual) {
  if (eta.size() < 8 || columns.size() < 4) {
    throw ConvergenceError("fourth-order profile table needs >= 8 nodes and 4 columns");
  }
  for (const auto& c : columns) {
    if (c.size() != eta.size()) throw ConvergenceError("profile table columns differ in length");
  }
  columns.resize(4);
  // v'''' and v^(5) from the ODE, for Hermite interpolation of every column.
  std::vector<double> d4(eta.size()), d5(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double x = eta[i];
    d4[i] = 0.25 * x * columns[1][i] - columns[0][i] + 1.0;
    d5[i] = -0.75 * columns[1][i] + 0.25 * x * columns[2][i];
  }
  columns.push_back(std::move(d4));
  columns.push_back(std::move(d5));

  LayerProfile p;
  p.order_ = Order::Fourth;
  p.eta_ = std::move(eta);
  p.columns_ = std::move(columns);
  p.tail_ = tail;
  p.peak_ = peak;
  p.residual_ = residual;
  return p;
}

double LayerProfile::value(double eta) const { return derivative(eta, 0); }

double LayerProfile::derivative(double eta, int k) const {
  if (k < 0 || k > 3) throw DomainError("profile derivatives are available up to order 3");
  if (order_ == Order::Second) return v2_derivative(eta, k);
  if (eta < 0.0) throw DomainError(fmt::format("profile requires eta >= 0, got {}", eta));
  if (eta > eta_.back()) return tail_derivative(tail_, eta, k);
  return hermite_column(eta_, columns_, k, eta);
}

double LayerProfile::eta_max() const {
  return order_ == Order::Second ? std::numeric_limits<double>::infinity() : eta_.back();
}

double LayerProfile::step() const { return eta_.size() > 1 ? eta_[1] - eta_[0] : 0.0; }

LayerProfile solve_profile4(const ProfileOptions& options) {
  LinearBvp bvp;
  bvp.dim = 4;
  bvp.coefficients = [](double eta, Eigen::Ref<Eigen::MatrixXd> a, Eigen::Ref<Eigen::VectorXd> g) {
    a.setZero();
    g.setZero();
    a(0, 1) = 1.0;
    a(1, 2) = 1.0;
    a(2, 3) = 1.0;
    a(3, 0) = -1.0;
    a(3, 1) = 0.25 * eta;
    g(3) = 1.0;
  };
  bvp.conditions = {{LinearBvp::Side::Left, 0, 0.0},
                    {LinearBvp::Side::Left, 1, 0.0},
                    {LinearBvp::Side::Right, 0, 1.0},
                    {LinearBvp::Side::Right, 1, 0.0}};
  const BvpSolution sol = solve_linear_bvp(bvp, options.eta_max, options.step);
  if (!(sol.residual <= kResidualTol)) {
    throw ConvergenceError(fmt::format("fourth-order profile residual {} exceeds {}",
                                       sol.residual, kResidualTol));
  }
  std::vector<std::vector<double>> cols(4, std::vector<double>(sol.eta.size()));
  for (std::size_t i = 0; i < sol.eta.size(); ++i) {
    for (int k = 0; k < 4; ++k) cols[k][i] = sol.y(static_cast<Eigen::Index>(i), k);
  }
  const ProfilePeak peak = extract_peak(sol.eta, cols[0]);
  const TailFit tail = fit_tail(sol.eta, cols[0]);
  return LayerProfile::fourth_order_table(sol.eta, std::move(cols), tail, peak, sol.residual);
}

double eval_profile4(const LayerProfile& profile, double eta) {
  if (profile.order() != Order::Fourth) {
    throw DomainError("eval_profile4 needs a fourth-order profile");
  }
  return profile.value(eta);
}

// ---------------------------------------------------------------------------
// CorrectionProfile

CorrectionProfile::CorrectionProfile(Order order, std::vector<double> eta,
                                     std::vector<std::vector<double>> columns, double residual)
    : order_(order), eta_(std::move(eta)), columns_(std::move(columns)), residual_(residual) {}

double CorrectionProfile::value(double eta) const {
  if (eta < 0.0) throw DomainError(fmt::format("correction requires eta >= 0, got {}", eta));
  if (eta >= eta_.back()) return 0.0;
  return hermite_column(eta_, columns_, 0, eta);
}

CorrectionProfile solve_curvature_correction(Order order, const LayerProfile& base,
                                             const ProfileOptions& options) {
  if (base.order() != order) {
    throw DomainError("curvature correction needs a leading-order profile of the same order");
  }
  LinearBvp bvp;
  if (order == Order::Second) {
    bvp.dim = 2;
    bvp.coefficients = [](double eta, Eigen::Ref<Eigen::MatrixXd> a,
                          Eigen::Ref<Eigen::VectorXd> g) {
      a << 0.0, 1.0, 1.5, -0.5 * eta;
      g << 0.0, v2_derivative(eta, 1);
    };
    bvp.conditions = {{LinearBvp::Side::Left, 0, 0.0}, {LinearBvp::Side::Right, 0, 0.0}};
  } else {
    bvp.dim = 4;
    bvp.coefficients = [&base](double eta, Eigen::Ref<Eigen::MatrixXd> a,
                               Eigen::Ref<Eigen::VectorXd> g) {
      a.setZero();
      g.setZero();
      a(0, 1) = 1.0;
      a(1, 2) = 1.0;
      a(2, 3) = 1.0;
      a(3, 0) = -1.25;
      a(3, 1) = 0.25 * eta;
      g(3) = 2.0 * base.derivative(eta, 3);
    };
    bvp.conditions = {{LinearBvp::Side::Left, 0, 0.0},
                      {LinearBvp::Side::Left, 1, 0.0},
                      {LinearBvp::Side::Right, 0, 0.0},
                      {LinearBvp::Side::Right, 1, 0.0}};
  }
  const double eta_max =
      order == Order::Fourth ? std::min(options.eta_max, base.eta_max()) : options.eta_max;
  const BvpSolution sol = solve_linear_bvp(bvp, eta_max, options.step);
  if (!(sol.residual <= kResidualTol)) {
    throw ConvergenceError(
        fmt::format("curvature correction residual {} exceeds {}", sol.residual, kResidualTol));
  }

  const std::size_t n = sol.eta.size();
  std::vector<std::vector<double>> cols(6, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sol.eta[i];
    const auto r = static_cast<Eigen::Index>(i);
    if (order == Order::Second) {
      const double w = sol.y(r, 0), w1 = sol.y(r, 1);
      const double w2 = -0.5 * x * w1 + 1.5 * w + v2_derivative(x, 1);
      cols[0][i] = w;
      cols[1][i] = w1;
      cols[2][i] = w2;
      cols[3][i] = w1 - 0.5 * x * w2 + v2_derivative(x, 2);
    } else {
      for (int k = 0; k < 4; ++k) cols[k][i] = sol.y(r, k);
      const double v0_4 = 0.25 * x * base.derivative(x, 1) - base.derivative(x, 0) + 1.0;
      cols[4][i] = 0.25 * x * cols[1][i] - 1.25 * cols[0][i] + 2.0 * base.derivative(x, 3);
      cols[5][i] = -cols[1][i] + 0.25 * x * cols[2][i] + 2.0 * v0_4;
    }
  }
  if (order == Order::Second) cols.resize(4);
  return CorrectionProfile(order, sol.eta, std::move(cols), sol.residual);
}

// ---------------------------------------------------------------------------
// CSV

void write_profile_csv(std::ostream& os, const LayerProfile& profile, double sample_step) {
  const bool fourth = profile.order() == Order::Fourth;
  const double eta_max = fourth ? profile.eta_max() : ProfileOptions{}.eta_max;
  const double step = sample_step > 0.0 ? sample_step
                                        : (fourth ? profile.step() : ProfileOptions{}.step);
  fmt::print(os, "# order={} eta_max={:.17g} A={:.17g} theta={:.17g} omega={:.17g} eta0={:.17g} "
                 "v_eta0={:.17g}\n",
             fourth ? 4 : 2, eta_max, profile.tail().amplitude, profile.tail().phase,
             profile.tail().rate, profile.peak().eta, profile.peak().value);
  os << "eta,v,dv,d2v,d3v\n";
  const auto count = static_cast<long>(std::lround(eta_max / step));
  for (long i = 0; i <= count; ++i) {
    const double eta = (fourth && sample_step <= 0.0) ? profile.nodes()[i] : i * step;
    if (fourth && sample_step <= 0.0) {
      fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", eta, profile.column(0)[i],
                 profile.column(1)[i], profile.column(2)[i], profile.column(3)[i]);
    } else {
      fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", eta, profile.derivative(eta, 0),
                 profile.derivative(eta, 1), profile.derivative(eta, 2),
                 profile.derivative(eta, 3));
    }
  }
}

LayerProfile read_profile_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || !line.starts_with("#")) {
    throw ConfigError("profile CSV: missing '#' header line", 1);
  }
  std::map<std::string, double> header;
  {
    std::istringstream hs(line.substr(1));
    std::string item;
    while (hs >> item) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) continue;
      header[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
  }
  for (const char* key : {"order", "A", "theta", "omega", "eta0", "v_eta0"}) {
    if (!header.contains(key)) throw ConfigError(fmt::format("profile CSV: header lacks {}", key), 1, key);
  }
  if (header["order"] != 4.0) throw ConfigError("profile CSV: only fourth-order tables load", 1, "order");
  std::getline(is, line);  // column names
  std::vector<double> eta;
  std::vector<std::vector<double>> cols(4);
  int lineno = 2;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 5) throw ConfigError("profile CSV: expected 5 columns", lineno);
    eta.push_back(vals[0]);
    for (int k = 0; k < 4; ++k) cols[k].push_back(vals[k + 1]);
  }
  return LayerProfile::fourth_order_table(
      std::move(eta), std::move(cols), TailFit{header["A"], header["theta"], header["omega"]},
      ProfilePeak{header["eta0"], header["v_eta0"]});
}

}  // namespace blowup
