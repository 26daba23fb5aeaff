#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blowup/geometry.hpp"
#include "blowup/solvers.hpp"

namespace lab {

using blowup::Order;

/// One experiment: a nonlinearity, an order, a geometry and a list of eps.
struct ExperimentConfig {
  std::string nonlinearity = "exp";
  Order order = Order::Fourth;
  /// `strip`, `radial_disc`, `cube`, or a planar domain spec (`disc`, `square:1`, ...).
  std::string geometry = "strip";
  std::vector<double> eps;

  /// Solver overrides; geometry, order, nonlinearity and eps are filled per run.
  blowup::SolverConfig solver;
  bool nodes_set = false;

  double resolution = 0.01;
  /// Time used by `predict`: reaction blow-up time unless a number is given.
  std::optional<double> T_eps;

  std::string out_dir = "out";
  std::vector<std::string> formats = {"csv"};

  bool is_strip() const { return geometry == "strip"; }
  bool is_cube() const { return geometry == "cube"; }
  /// Planar domain used by the predictor; nullopt for the strip and the cube.
  std::optional<blowup::PlanarDomain> domain() const;
  /// Solver settings for one eps. Throws ConfigError when no solver covers the geometry.
  blowup::SolverConfig solver_for(double eps) const;
  bool wants(const std::string& format) const;
};

/// Parses YAML text. Unknown keys, wrong types and invalid values raise
/// ConfigError carrying the 1-based line and the key path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Normalized YAML that parses back to the same configuration.
std::string echo_config(const ExperimentConfig& cfg);

}  // namespace lab
