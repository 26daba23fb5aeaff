#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "blowup/reaction.hpp"

namespace blowup {

/// Decay rate of the oscillatory far field of the fourth-order profile.
inline constexpr double kTailRate = 0.23623519685528870;  // 3 * 2^(-11/3)

/// Second-order similarity profile, 1 + eta e^{-eta^2/4}/sqrt(pi) - (1 + eta^2/2) erfc(eta/2).
double v2(double eta);
/// k-th derivative of v2, k in [0, 3].
double v2_derivative(double eta, int k);
/// Large-eta form 1 - 8 e^{-eta^2/4} / (sqrt(pi) eta^3); requires eta >= 5.
double v2_tail(double eta);

/// Far field v ~ 1 + A sin(sqrt(3) w eta^(4/3) + theta) e^{-w eta^(4/3)}.
struct TailFit {
  double amplitude = 0.0;
  double phase = 0.0;
  double rate = kTailRate;
};

struct ProfilePeak {
  double eta = 0.0;
  double value = 0.0;
};

struct ProfileOptions {
  double step = 1.0 / 200.0;
  double eta_max = 32.0;
};

/// Boundary-layer similarity profile v(eta).
///
/// The second-order profile is the closed form `v2`. The fourth-order profile
/// is a table of (v, v', v'', v''') on a uniform mesh, interpolated with
/// quintic Hermite polynomials and continued past eta_max by the WKB tail.
class LayerProfile {
 public:
  static LayerProfile second_order();
  /// Wraps a solved or loaded fourth-order table. `columns[k]` holds the k-th
  /// derivative (k = 0..3) at each node; v'''' and v^(5) follow from the ODE.
  static LayerProfile fourth_order_table(std::vector<double> eta,
                                         std::vector<std::vector<double>> columns, TailFit tail,
                                         ProfilePeak peak, double residual = 0.0);

  Order order() const { return order_; }
  bool closed_form() const { return order_ == Order::Second; }

  double value(double eta) const;
  /// k-th derivative, k in [0, 3].
  double derivative(double eta, int k) const;

  double eta_max() const;
  double step() const;
  const std::vector<double>& nodes() const { return eta_; }
  /// Column k of the table (k-th derivative at the nodes); Fourth only.
  const std::vector<double>& column(int k) const { return columns_.at(k); }
  const TailFit& tail() const { return tail_; }
  /// Interior maximum (Fourth); for Second the value is the asymptote 1.
  const ProfilePeak& peak() const { return peak_; }
  double residual() const { return residual_; }

 private:
  Order order_ = Order::Second;
  std::vector<double> eta_;
  std::vector<std::vector<double>> columns_;
  TailFit tail_;
  ProfilePeak peak_{0.0, 1.0};
  double residual_ = 0.0;
};

/// Solves -v'''' + (eta/4) v' - v = -1, v(0) = v'(0) = 0, with the decaying
/// far field imposed as v = 1, v' = 0 at eta_max. Throws ConvergenceError if
/// the discrete residual exceeds 1e-9 or the maximum is not interior.
LayerProfile solve_profile4(const ProfileOptions& options = {});
double eval_profile4(const LayerProfile& profile, double eta);

/// Curvature correction vbar1: the O(phi) layer term divided by curvature.
class CorrectionProfile {
 public:
  CorrectionProfile(Order order, std::vector<double> eta, std::vector<std::vector<double>> columns,
                    double residual);

  Order order() const { return order_; }
  /// vbar1(eta); zero beyond the table.
  double value(double eta) const;
  const std::vector<double>& nodes() const { return eta_; }
  /// Column k holds the k-th derivative of vbar1 at the nodes.
  const std::vector<double>& column(int k) const { return columns_.at(k); }
  double residual() const { return residual_; }

 private:
  Order order_;
  std::vector<double> eta_;
  std::vector<std::vector<double>> columns_;
  double residual_;
};

/// Second:  vbar'' + (eta/2) vbar' - (3/2) vbar = v0',      vbar(0) = 0.
/// Fourth: -vbar'''' + (eta/4) vbar' - (5/4) vbar = -2 v0''', vbar(0) = vbar'(0) = 0.
/// Both decay at infinity. `base` must be the matching leading-order profile.
CorrectionProfile solve_curvature_correction(Order order, const LayerProfile& base,
                                             const ProfileOptions& options = {});

/// Dumps eta,v[,dv,d2v,d3v] with a `# key=value` header line carrying order,
/// eta_max, A, theta, omega, eta0 and v(eta0).
void write_profile_csv(std::ostream& os, const LayerProfile& profile, double sample_step = 0.0);
/// Reads a fourth-order table written by `write_profile_csv`.
LayerProfile read_profile_csv(std::istream& is);

}  // namespace blowup
