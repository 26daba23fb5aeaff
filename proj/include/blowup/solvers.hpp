#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blowup/reaction.hpp"

namespace blowup {

using Coord = Eigen::Vector3d;

enum class GeometryKind { Strip, Rect, RadialDisc, Cube };
const char* geometry_name(GeometryKind g);

struct SolverConfig {
  Order order = Order::Fourth;
  Nonlinearity nonlinearity = Nonlinearity::exponential();
  /// eps = 0 switches diffusion off (pure reaction at every node).
  double eps = 0.1;

  GeometryKind geometry = GeometryKind::Strip;
  /// Rect extent; the strip is [-1, 1], the disc has radius 1, the cube is [-1, 1]^3.
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;

  /// Nodes per axis including the boundary nodes (radial: cells between the axis and r = 1).
  int nodes = 2001;
  int nodes_y = 0;  // 0: same spacing as x
  int nodes_z = 0;
  /// tanh grading towards the strip walls; 0 is uniform. Strip only.
  double grading = 0.0;

  double dt_initial = 1e-4;
  double dt_min = 1e-13;
  double safety = 0.9;
  /// Richardson error tolerance, relative to max(1, |u|_inf).
  double rtol = 1e-6;
  /// Upper bound on the relative growth of |u|_inf per step.
  double growth = 0.02;

  double threshold = 1e3;  // M
  long max_steps = 200000;
  /// Runs reaching this time without crossing M report no blow-up. 0 means 10 T0.
  double t_max = 0.0;

  double noise = 0.0;
  std::uint64_t seed = 0;

  /// Extra output times at which the field is recorded exactly.
  std::vector<double> sample_times;
  /// Record a trajectory point every `snapshot_stride` accepted steps (0: never).
  int snapshot_stride = 0;
  /// Keep the full field at every trajectory snapshot.
  bool keep_snapshots = false;

  double peak_fraction = 0.5;
  double peak_separation = 4.0;  // grid cells

  /// Refuses grids with more unknowns than this.
  long max_unknowns = 4'000'000;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Field on a tensor grid (boundary nodes included); index i + nx (j + ny k).
struct Field {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  /// Radial fields store u(r) on the r axis.
  bool radial = false;

  int dim() const { return static_cast<int>(axes.size()); }
  std::size_t size(int axis) const { return axes[axis].size(); }
  double max_abs() const;
  /// Sorted coordinates of the nodes.
  Coord coord(std::size_t index) const;
};

struct Sample {
  double t = 0.0;
  Field field;
};

struct TrackPoint {
  double t = 0.0;
  int track = 0;
  Coord x = Coord::Zero();
  double value = 0.0;
};

enum class Outcome { BlowUp, NoBlowUp };

struct BlowupReport {
  Outcome outcome = Outcome::BlowUp;
  std::string message;
  SolverConfig config;

  /// Time at which |u|_inf crossed M, plus the reaction tail integral from there.
  double T_eps = 0.0;
  double t_stop = 0.0;
  double u_max = 0.0;
  Field final_field;
  std::vector<Coord> points;
  /// Radial runs: radius of the maximizing ring (0 at the axis).
  double ring_radius = 0.0;
  std::vector<TrackPoint> trajectory;
  std::vector<Sample> samples;
  std::vector<Sample> snapshots;

  long steps = 0;
  long rejected = 0;
  std::vector<double> dt_history;
  std::vector<double> t_history;
  std::vector<double> umax_history;
  /// Second order: max over steps of (max u - z) / max(1, z), z the uniform
  /// state advanced by the same steps. The maximum principle bounds it by the
  /// step error tolerance.
  double supersolution_excess = -INFINITY;

  std::size_t multiplicity() const { return points.size(); }
};

/// Strip [-1, 1]: u(+-1) = 0, and u_x(+-1) = 0 for the fourth-order problem.
BlowupReport solve_1d(const SolverConfig& cfg);
/// Radially symmetric disc on r_i = (i + 1/2) h.
BlowupReport solve_radial_disc(const SolverConfig& cfg);
/// Rectangle with 5-point Laplacian or 13-point bi-Laplacian.
BlowupReport solve_rect2d(const SolverConfig& cfg);
/// Cube [-1, 1]^3, fourth order.
BlowupReport solve_cube3d(const SolverConfig& cfg);
/// Dispatches on cfg.geometry.
BlowupReport solve(const SolverConfig& cfg);

/// integral_U^inf du / f(u).
double reaction_tail(const ReactionSolution& rs, double U);

/// Strict local maxima with value >= threshold_fraction |u|_inf, merged within
/// `separation` grid cells (larger kept), refined by a quadratic fit per axis.
std::vector<Coord> extract_singularities(const Field& field, double threshold_fraction = 0.5,
                                         double separation = 4.0);
/// Links per-snapshot maxima into tracks by nearest association.
std::vector<TrackPoint> track_peaks(const std::vector<Sample>& history,
                                    double threshold_fraction = 0.5, double separation = 4.0);

/// t,track,x,y,z,value.
void write_trajectory_csv(std::ostream& os, const std::vector<TrackPoint>& trajectory);
/// index,x,y,z.
void write_singularities_csv(std::ostream& os, const BlowupReport& report);
/// x[,y[,z]],u on the tensor grid (r,u for radial fields).
void write_field_csv(std::ostream& os, const Field& field);
/// key: value lines: outcome, T_eps, t_stop, u_max, multiplicity, steps, ...
void write_report_summary(std::ostream& os, const BlowupReport& report);

}  // namespace blowup
