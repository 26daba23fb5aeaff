#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace blowup {

/// Order of the diffusion operator: eps^2 Laplacian or -eps^4 bi-Laplacian.
enum class Order { Second, Fourth };

/// Reaction term f(u) with f(0) = 1 and f > 0 on u >= 0.
///
/// Built-in kinds are the exponential e^u and the shifted power (1+u)^p.
/// Custom kinds carry an arbitrary evaluator; their derivative falls back to a
/// centred difference when none is supplied.
class Nonlinearity {
 public:
  enum class Kind { Exponential, Power, Custom };
  using Fn = std::function<double(double)>;

  static Nonlinearity exponential();
  static Nonlinearity power(double p);
  /// Throws DomainError when |f(0) - 1| > 1e-12.
  static Nonlinearity custom(std::string name, Fn f, Fn df = {});

  /// Accepts `exp`, `pow:<p>` or the name of a registered custom kind.
  static Nonlinearity parse(std::string_view text);

  double operator()(double u) const;
  double derivative(double u) const;

  Kind kind() const { return kind_; }
  double exponent() const { return p_; }
  /// Round-trippable config spelling (`exp`, `pow:2`, registry name).
  const std::string& name() const { return name_; }

 private:
  Nonlinearity(Kind kind, double p, std::string name, Fn f, Fn df);

  Kind kind_;
  double p_ = 0.0;
  std::string name_;
  Fn f_;
  Fn df_;
};

double eval_f(const Nonlinearity& nl, double u);

/// Named custom nonlinearities available to `Nonlinearity::parse`. The
/// registry ships with `quadratic`, f(u) = 1 + u + u^2.
void register_custom(const std::string& name, Nonlinearity::Fn f, Nonlinearity::Fn df = {});
std::vector<std::string> registered_customs();

/// Blow-up time T0 = integral_0^inf du / f(u). Closed form for built-ins;
/// quadrature after u = tan(theta) otherwise. Throws DivergenceError when the
/// integral does not settle.
double blowup_time_T0(const Nonlinearity& nl);

/// The spatially uniform solution u0' = f(u0), u0(0) = 0 on [0, T0).
class ReactionSolution {
 public:
  enum class Form { ClosedForm, Tabulated };

  /// Closed form for built-in kinds, a dense ODE table otherwise.
  explicit ReactionSolution(Nonlinearity nl);
  /// Forces the tabulated path, also for built-ins.
  static ReactionSolution tabulated(Nonlinearity nl);

  const Nonlinearity& nonlinearity() const { return nl_; }
  Form form() const { return form_; }
  double T0() const { return T0_; }
  /// Largest admissible query time: T0 for closed forms, T0 (1 - 1e-6) for tables.
  double end_time() const;

  /// u0(t); throws RangeError for t outside [0, end_time()).
  double state(double t) const;
  /// t with u0(t) = u. Returns +inf when u lies beyond the tabulated range.
  double invert(double u) const;
  /// Layer width eps u0^(1/2) (second order) or eps u0^(1/4) (fourth order).
  double gauge(double t, double eps, Order order) const;

  /// Table nodes (t_i, u_i); empty for closed forms.
  const std::vector<double>& table_times() const;
  const std::vector<double>& table_values() const;

  static constexpr double kTableEndFraction = 1e-6;
  static constexpr double kRelTol = 1e-10;

 private:
  struct Table;
  ReactionSolution(Nonlinearity nl, Form form);

  Nonlinearity nl_;
  Form form_;
  double T0_;
  std::shared_ptr<const Table> table_;
};

double reaction_state(const ReactionSolution& rs, double t);
double invert_reaction(const ReactionSolution& rs, double u);
double gauge(const ReactionSolution& rs, double t, double eps, Order order);

}  // namespace blowup
