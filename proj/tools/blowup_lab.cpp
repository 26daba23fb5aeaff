#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "commands.hpp"

namespace {

void print_comparisons(const std::vector<lab::Comparison>& cmp) {
  for (const auto& c : cmp) {
    fmt::print("eps {:g}: predicted {} computed {} {}\n", c.eps,
               c.curve ? std::string("curve") : std::to_string(c.predicted), c.computed,
               c.agree ? "agree" : "differ");
  }
}

int solved_exit(const std::vector<lab::SolvedRun>& runs) {
  int code = lab::kOk;
  for (const auto& r : runs) {
    const bool blew = r.outcome == blowup::Outcome::BlowUp;
    fmt::print("eps {:g}: {} T_eps {:.8g} points {}\n", r.eps, blew ? "blow-up" : "no blow-up",
               r.T_eps, r.points.size());
    if (!blew) code = lab::kNoBlowUp;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blow-up experiments for reaction-diffusion problems with small diffusion"};
  app.require_subcommand(1);

  std::string config_path, out_dir, profile_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0, order = 4;

  auto* profile = app.add_subcommand("profile", "Compute the layer profile of order 2 or 4");
  profile->add_option("--order", order, "Profile order")->check(CLI::IsMember({2, 4}));
  profile->add_option("--out", profile_dir, "Output directory")->capture_default_str();

  std::vector<CLI::App*> verbs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"predict", "Predict blow-up points"},
           {"solve", "Run the PDE solver"},
           {"sweep", "Solve, predict with the measured blow-up time, and compare"},
           {"compare", "Join existing predict and solve outputs"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "YAML experiment file")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides outputs.directory)");
    sub->add_option("--seed", seed, "Noise seed (overrides solver.seed)");
    verbs.push_back(sub);
  }
  app.add_option("--threads", threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? lab::kOk : lab::kConfigError;
  }

  try {
    if (threads > 0) blowup::set_thread_count(static_cast<unsigned>(threads));
    if (profile->parsed()) {
      lab::cmd_profile(order, profile_dir);
      return lab::kOk;
    }
    auto cfg = lab::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.solver.seed = *seed;

    if (verbs[0]->parsed()) {
      for (const auto& r : lab::cmd_predict(cfg)) {
        fmt::print("eps {:g}: {} {} points\n", r.eps, blowup::regime_name(r.prediction.regime),
                   r.prediction.points.size());
      }
      return lab::kOk;
    }
    if (verbs[1]->parsed()) return solved_exit(lab::cmd_solve(cfg));
    if (verbs[2]->parsed()) {
      std::vector<lab::SolvedRun> runs;
      const auto cmp = lab::cmd_sweep(cfg, &runs);
      const int code = solved_exit(runs);
      print_comparisons(cmp);
      return code;
    }
    print_comparisons(lab::cmd_compare(cfg));
    return lab::kOk;
  } catch (const blowup::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return lab::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return lab::kNumericalFailure;
  }
}
