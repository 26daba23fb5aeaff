#include "blowup/reaction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

bool is_integer(double p) { return std::floor(p) == p; }

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::pair<Nonlinearity::Fn, Nonlinearity::Fn>>& registry() {
  static std::map<std::string, std::pair<Nonlinearity::Fn, Nonlinearity::Fn>> r = {
      {"quadratic",
       {[](double u) { return 1.0 + u + u * u; }, [](double u) { return 1.0 + 2.0 * u; }}},
  };
  return r;
}

// Adaptive Dormand-Prince 5(4) for u' = f(u) from (t, u) to t_end. `on_step`
// sees every accepted (t, u) after the start.
template <typename OnStep>
double integrate_reaction(const Nonlinearity& f, double rtol, double atol, double t, double u,
                          double t_end, double h, OnStep&& on_step) {
  namespace ode = boost::numeric::odeint;
  auto rhs = [&f](const double& x, double& dx, double) {
    dx = f(x);
    if (!(dx > 0.0) && x >= 0.0) {
      throw DomainError(fmt::format("nonlinearity {} is not positive at u = {}", f.name(), x));
    }
  };
  const double t0 = t;
  ode::integrate_adaptive(ode::make_controlled(atol, rtol, ode::runge_kutta_dopri5<double>()), rhs, u,
                          t, t_end, h, [&](const double& x, double tt) {
                            if (tt > t0) on_step(tt, x);
                          });
  return u;
}

double closed_form_state(const Nonlinearity& nl, double t) {
  if (nl.kind() == Nonlinearity::Kind::Exponential) return -std::log1p(-t);
  const double q = nl.exponent() - 1.0;
  return std::expm1(-std::log1p(-q * t) / q);
}

double closed_form_inverse(const Nonlinearity& nl, double u) {
  if (nl.kind() == Nonlinearity::Kind::Exponential) return -std::expm1(-u);
  const double q = nl.exponent() - 1.0;
  return -std::expm1(-q * std::log1p(u)) / q;
}

double quadrature_T0(const Nonlinearity& nl) {
  // u = tan(theta) maps [0, inf) onto [0, pi/2).
  // On the upper half, xc = b - theta; the gap to pi/2 is then formed without
  // cancellation, keeping cos and tan accurate near the pole.
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto partial = [&](double b) {
    const double offset = std::numbers::pi / 2.0 - b;
    auto integrand = [&](double theta, double xc) {
      const bool upper = theta > 0.5 * b;
      const double gap = upper ? offset + xc : std::numbers::pi / 2.0 - theta;
      const double c = std::sin(gap);
      if (c == 0.0) return 0.0;
      const double fu = nl(std::cos(gap) / c);
      if (!(fu > 0.0)) {
        throw DomainError(fmt::format("nonlinearity {} is not positive on u >= 0", nl.name()));
      }
      return 1.0 / (c * (c * fu));
    };
    try {
      return integrator.integrate(integrand, 0.0, b, 1e-13);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    } catch (const boost::math::evaluation_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double mid = partial(std::atan(1e8));
  const double far = partial(std::atan(1e16));
  if (!std::isfinite(mid) || !std::isfinite(far) || far - mid > 1e-3 * mid) {
    throw DivergenceError(
        fmt::format("integral of 1/f for {} does not converge; no finite-time blow-up", nl.name()));
  }
  const double total = partial(std::numbers::pi / 2.0);
  if (!std::isfinite(total)) throw DivergenceError("integral of 1/f is not finite");
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity::Nonlinearity(Kind kind, double p, std::string name, Fn f, Fn df)
    : kind_(kind), p_(p), name_(std::move(name)), f_(std::move(f)), df_(std::move(df)) {}

Nonlinearity Nonlinearity::exponential() {
  return Nonlinearity(Kind::Exponential, 0.0, "exp", {}, {});
}

Nonlinearity Nonlinearity::power(double p) {
  if (!(p > 1.0)) throw DomainError(fmt::format("power nonlinearity needs p > 1, got {}", p));
  return Nonlinearity(Kind::Power, p, fmt::format("pow:{}", p), {}, {});
}

Nonlinearity Nonlinearity::custom(std::string name, Fn f, Fn df) {
  if (!f) throw DomainError("custom nonlinearity needs an evaluator");
  const double f0 = f(0.0);
  if (!(std::abs(f0 - 1.0) <= 1e-12)) {
    throw DomainError(fmt::format("custom nonlinearity {} has f(0) = {} != 1", name, f0));
  }
  return Nonlinearity(Kind::Custom, 0.0, std::move(name), std::move(f), std::move(df));
}

Nonlinearity Nonlinearity::parse(std::string_view text) {
  if (text == "exp") return exponential();
  if (text.starts_with("pow:")) {
    const std::string num(text.substr(4));
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size()) {
      throw DomainError(fmt::format("cannot parse power exponent in '{}'", text));
    }
    return power(p);
  }
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(std::string(text));
  if (it == registry().end()) {
    throw DomainError(fmt::format("unknown nonlinearity '{}'", text));
  }
  return custom(it->first, it->second.first, it->second.second);
}

double Nonlinearity::operator()(double u) const {
  switch (kind_) {
    case Kind::Exponential:
      return std::exp(u);
    case Kind::Power: {
      const double base = 1.0 + u;
      if (base <= 0.0 && !is_integer(p_)) {
        throw DomainError(fmt::format("(1+u)^{} undefined at u = {}", p_, u));
      }
      return std::pow(base, p_);
    }
    case Kind::Custom:
      return f_(u);
  }
  return 0.0;
}

double Nonlinearity::derivative(double u) const {
  switch (kind_) {
    case Kind::Exponential:
      return std::exp(u);
    case Kind::Power: {
      const double base = 1.0 + u;
      if (base <= 0.0 && !is_integer(p_)) {
        throw DomainError(fmt::format("(1+u)^{} undefined at u = {}", p_, u));
      }
      return p_ * std::pow(base, p_ - 1.0);
    }
    case Kind::Custom: {
      if (df_) return df_(u);
      const double h = 1e-6 * std::max(1.0, std::abs(u));
      return (f_(u + h) - f_(u - h)) / (2.0 * h);
    }
  }
  return 0.0;
}

double eval_f(const Nonlinearity& nl, double u) { return nl(u); }

void register_custom(const std::string& name, Nonlinearity::Fn f, Nonlinearity::Fn df) {
  // Validates f(0) = 1 before the name becomes visible.
  (void)Nonlinearity::custom(name, f, df);
  if (name == "exp" || name.starts_with("pow:")) {
    throw DomainError(fmt::format("'{}' is reserved for built-in nonlinearities", name));
  }
  std::lock_guard lock(registry_mutex());
  registry()[name] = {std::move(f), std::move(df)};
}

std::vector<std::string> registered_customs() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> names;
  for (const auto& [name, fns] : registry()) names.push_back(name);
  return names;
}

double blowup_time_T0(const Nonlinearity& nl) {
  switch (nl.kind()) {
    case Nonlinearity::Kind::Exponential:
      return 1.0;
    case Nonlinearity::Kind::Power:
      return 1.0 / (nl.exponent() - 1.0);
    case Nonlinearity::Kind::Custom:
      return quadrature_T0(nl);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// ReactionSolution

struct ReactionSolution::Table {
  std::vector<double> t;
  std::vector<double> u;
};

ReactionSolution::ReactionSolution(Nonlinearity nl)
    : ReactionSolution(nl, nl.kind() == Nonlinearity::Kind::Custom ? Form::Tabulated
                                                                   : Form::ClosedForm) {}

ReactionSolution ReactionSolution::tabulated(Nonlinearity nl) {
  return ReactionSolution(std::move(nl), Form::Tabulated);
}

ReactionSolution::ReactionSolution(Nonlinearity nl, Form form)
    : nl_(std::move(nl)), form_(form), T0_(0.0) {
  if (form_ == Form::ClosedForm) {
    T0_ = blowup_time_T0(nl_);
    return;
  }
  T0_ = quadrature_T0(nl_);
  auto table = std::make_shared<Table>();
  table->t.push_back(0.0);
  table->u.push_back(0.0);
  const double t_end = T0_ * (1.0 - kTableEndFraction);
  integrate_reaction(nl_, kRelTol, 1e-14, 0.0, 0.0, t_end, 1e-4 * T0_, [&](double t, double u) {
    table->t.push_back(t);
    table->u.push_back(u);
  });
  table_ = std::move(table);
}

double ReactionSolution::end_time() const {
  return form_ == Form::ClosedForm ? T0_ : table_->t.back();
}

double ReactionSolution::state(double t) const {
  if (!(t >= 0.0)) throw RangeError(fmt::format("reaction state queried at t = {} < 0", t));
  if (t >= end_time()) {
    throw RangeError(fmt::format("reaction state queried at t = {} >= {} (T0 = {})", t,
                                 end_time(), T0_));
  }
  if (form_ == Form::ClosedForm) return closed_form_state(nl_, t);

  const auto& ts = table_->t;
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = static_cast<std::size_t>(std::distance(ts.begin(), it)) - 1;
  if (ts[i] == t) return table_->u[i];
  return integrate_reaction(nl_, kRelTol * 1e-2, 1e-15, ts[i], table_->u[i], t, t - ts[i],
                            [](double, double) {});
}

double ReactionSolution::invert(double u) const {
  if (!(u >= 0.0)) throw RangeError(fmt::format("cannot invert reaction at u = {} < 0", u));
  if (u == 0.0) return 0.0;
  if (form_ == Form::ClosedForm) {
    if (!std::isfinite(u)) return T0_;
    return closed_form_inverse(nl_, u);
  }
  const auto& us = table_->u;
  if (u >= us.back()) return std::numeric_limits<double>::infinity();
  const auto it = std::upper_bound(us.begin(), us.end(), u);
  const std::size_t i = static_cast<std::size_t>(std::distance(us.begin(), it)) - 1;
  double lo = table_->t[i];
  double hi = table_->t[i + 1];
  // Safeguarded Newton on u0(t) - u, using u0' = f(u0).
  double t = lo + (hi - lo) * (u - us[i]) / (us[i + 1] - us[i]);
  for (int iter = 0; iter < 200; ++iter) {
    const double val = state(t);
    if (val < u) lo = t; else hi = t;
    double next = t + (u - val) / nl_(val);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double dt = std::abs(next - t);
    t = next;
    if (dt <= 1e-13 * std::max(1.0, t) || hi - lo <= 1e-13) break;
  }
  return t;
}

double ReactionSolution::gauge(double t, double eps, Order order) const {
  const double u0 = state(t);
  return eps * (order == Order::Second ? std::sqrt(u0) : std::sqrt(std::sqrt(u0)));
}

const std::vector<double>& ReactionSolution::table_times() const {
  static const std::vector<double> empty;
  return table_ ? table_->t : empty;
}

const std::vector<double>& ReactionSolution::table_values() const {
  static const std::vector<double> empty;
  return table_ ? table_->u : empty;
}

double reaction_state(const ReactionSolution& rs, double t) { return rs.state(t); }
double invert_reaction(const ReactionSolution& rs, double u) { return rs.invert(u); }
double gauge(const ReactionSolution& rs, double t, double eps, Order order) {
  return rs.gauge(t, eps, order);
}

}  // namespace blowup
