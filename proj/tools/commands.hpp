#pragma once

#include <filesystem>
#include <vector>

#include "blowup/predictor.hpp"
#include "blowup/solvers.hpp"
#include "config.hpp"

namespace lab {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kNoBlowUp = 4 };

struct PredictedRun {
  double eps = 0.0;
  blowup::Prediction prediction;
};

struct SolvedRun {
  double eps = 0.0;
  blowup::Outcome outcome = blowup::Outcome::BlowUp;
  double T_eps = 0.0;
  double t_stop = 0.0;
  double u_max = 0.0;
  std::vector<blowup::Coord> points;
};

struct Comparison {
  double eps = 0.0;
  std::size_t predicted = 0;
  bool curve = false;  // the prediction is a level curve, not a point set
  std::size_t computed = 0;
  bool agree = false;
  /// Matched pairs (predicted index or -1, computed index or -1, distance).
  struct Match {
    int predicted = -1;
    int computed = -1;
    blowup::Point pred = blowup::Point::Zero();
    blowup::Point comp = blowup::Point::Zero();
    double distance = 0.0;
  };
  std::vector<Match> matches;
};

/// Profile table and summary for order 2 or 4, in `out`.
void cmd_profile(int order, const std::filesystem::path& out);
std::vector<PredictedRun> cmd_predict(const ExperimentConfig& cfg);
/// Returns the runs; the caller maps any NoBlowUp outcome to exit code 4.
std::vector<SolvedRun> cmd_solve(const ExperimentConfig& cfg);
/// Solves, predicts with the measured T_eps, and compares.
std::vector<Comparison> cmd_sweep(const ExperimentConfig& cfg, std::vector<SolvedRun>* runs = nullptr);
/// Joins the predict and solve outputs already in the output directory.
std::vector<Comparison> cmd_compare(const ExperimentConfig& cfg);

/// Nearest-assignment join of one prediction with one solve.
Comparison compare_run(const PredictedRun& pred, const SolvedRun& run);

}  // namespace lab
