#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"
#include "blowup/profiles.hpp"
#include "blowup/skeleton.hpp"
#include "svg.hpp"

namespace lab {

namespace fs = std::filesystem;
using namespace blowup;

namespace {

std::string eps_tag(double eps) { return fmt::format("eps_{:g}", eps); }

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
  return os;
}

void write_text(const fs::path& p, const std::string& text) { open_out(p) << text; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError(fmt::format("missing '{}'; run predict and solve first", p.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

Regime regime_from_name(const std::string& s) {
  for (Regime r : {Regime::OmegaSet, Regime::SkeletonPoints, Regime::Origin, Regime::StripPair,
                   Regime::DistanceArgmax}) {
    if (s == regime_name(r)) return r;
  }
  throw ConfigError(fmt::format("unknown regime '{}' in predictions.csv", s));
}

double time_for_prediction(const ExperimentConfig& cfg, const ReactionSolution& rs) {
  return cfg.T_eps ? *cfg.T_eps : rs.T0();
}

struct PredictContext {
  ReactionSolution rs;
  LayerModel model;
  std::optional<PlanarDomain> dom;
  std::optional<Skeleton> skeleton;
};

PredictContext make_context(const ExperimentConfig& cfg) {
  if (cfg.is_cube()) {
    throw ConfigError("the predictor covers the strip and planar domains, not the cube", -1,
                      "geometry");
  }
  PredictContext ctx{ReactionSolution(Nonlinearity::parse(cfg.nonlinearity)),
                     LayerModel::make(cfg.order), cfg.domain(), std::nullopt};
  if (ctx.dom) ctx.skeleton = compute_skeleton(*ctx.dom, cfg.resolution);
  return ctx;
}

Prediction predict_one(const ExperimentConfig& cfg, const PredictContext& ctx, double eps, double T,
                       bool measured) {
  if (!(eps > 0.0)) throw ConfigError("predictions need eps > 0", -1, "eps");
  if (!ctx.dom) {
    if (cfg.order == Order::Fourth) return predict_1d_fourth(ctx.rs, eps, T, ctx.model.eta0(), measured);
    Prediction p;
    p.regime = Regime::DistanceArgmax;
    p.order = Order::Second;
    p.eps = eps;
    p.T_eps = T;
    p.T_eps_measured = measured;
    p.points = {Point::Zero()};
    return p;
  }
  if (cfg.order == Order::Second) {
    Prediction p = predict_second_2d(*ctx.dom, *ctx.skeleton);
    p.eps = eps;
    p.T_eps = T;
    p.T_eps_measured = measured;
    return p;
  }
  return predict_fourth_2d(*ctx.dom, *ctx.skeleton, ctx.rs, ctx.model, eps, T, measured);
}

void write_prediction_svg(const fs::path& p, const ExperimentConfig& cfg,
                          const PredictContext& ctx, const PredictedRun& run) {
  double lo = -1.0, hi = 1.0;
  std::vector<double> bx, by;
  if (ctx.dom) {
    const auto b = ctx.dom->bounds();
    lo = std::min(b.min().x(), b.min().y()) - 0.05;
    hi = std::max(b.max().x(), b.max().y()) + 0.05;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
      const auto bp = ctx.dom->boundary_point(ctx.dom->param_period() * i / n);
      bx.push_back(bp.point.x());
      by.push_back(bp.point.y());
    }
  } else {
    bx = {-1.0, 1.0};
    by = {0.0, 0.0};
  }
  SvgPlot plot(lo, hi, lo, hi, fmt::format("{} eps={:g} {}", cfg.geometry, run.eps,
                                           regime_name(run.prediction.regime)));
  plot.polyline(bx, by, "black", ctx.dom.has_value());
  if (ctx.skeleton) {
    std::vector<double> sx, sy;
    for (const auto& s : ctx.skeleton->samples)
      if (s.medial) sx.push_back(s.x.x()), sy.push_back(s.x.y());
    plot.points(sx, sy, "#bbbbbb", true);
  }
  for (const auto& c : run.prediction.curves) {
    std::vector<double> cx, cy;
    for (const auto& q : c.points) cx.push_back(q.x()), cy.push_back(q.y());
    plot.polyline(cx, cy, "#1f77b4", c.closed);
  }
  std::vector<double> px, py;
  for (const auto& q : run.prediction.points) px.push_back(q.x()), py.push_back(q.y());
  plot.points(px, py, "#d62728");
  write_text(p, plot.str());
}

void write_predictions(const ExperimentConfig& cfg, const PredictContext& ctx,
                       const std::vector<PredictedRun>& runs) {
  const fs::path out = cfg.out_dir;
  std::vector<Prediction> preds;
  for (const auto& r : runs) preds.push_back(r.prediction);
  auto os = open_out(out / "predictions.csv");
  write_prediction_csv(os, preds);
  if (ctx.skeleton) {
    auto sk = open_out(out / "skeleton.csv");
    write_skeleton_csv(sk, *ctx.skeleton);
  }
  for (const auto& r : runs) {
    if (!r.prediction.curves.empty()) {
      auto lv = open_out(out / fmt::format("omega_{}.csv", eps_tag(r.eps)));
      write_level_csv(lv, r.prediction.curves);
    }
    if (cfg.wants("svg")) {
      write_prediction_svg(out / fmt::format("prediction_{}.svg", eps_tag(r.eps)), cfg, ctx, r);
    }
  }
}

SolvedRun run_solver(const ExperimentConfig& cfg, double eps) {
  const SolverConfig sc = cfg.solver_for(eps);
  const BlowupReport rep = solve(sc);
  const fs::path dir = fs::path(cfg.out_dir) / eps_tag(eps);

  ExperimentConfig single = cfg;
  single.eps = {eps};
  {
    auto os = open_out(dir / "summary.txt");
    write_report_summary(os, rep);
    os << "config:\n";
    std::istringstream echo(echo_config(single));
    for (std::string line; std::getline(echo, line);) os << "  " << line << '\n';
  }
  {
    auto os = open_out(dir / "singularities.csv");
    write_singularities_csv(os, rep);
  }
  {
    auto os = open_out(dir / "field.csv");
    write_field_csv(os, rep.final_field);
  }
  {
    auto os = open_out(dir / "steps.csv");
    os << "t,dt,umax\n";
    for (std::size_t i = 0; i < rep.t_history.size(); ++i) {
      fmt::print(os, "{:.15g},{:.6g},{:.10g}\n", rep.t_history[i], rep.dt_history[i],
                 rep.umax_history[i]);
    }
  }
  if (!rep.trajectory.empty()) {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, rep.trajectory);
  }
  for (const auto& s : rep.samples) {
    auto os = open_out(dir / fmt::format("field_t{:g}.csv", s.t));
    write_field_csv(os, s.field);
  }
  return {eps, rep.outcome, rep.T_eps, rep.t_stop, rep.u_max, rep.points};
}

void write_solve_table(const fs::path& p, const std::vector<SolvedRun>& runs) {
  auto os = open_out(p);
  os << "eps,outcome,T_eps,t_stop,u_max,multiplicity,index,x,y,z\n";
  for (const auto& r : runs) {
    const auto head = fmt::format("{:.10g},{},{:.12g},{:.12g},{:.10g},{}", r.eps,
                                  r.outcome == Outcome::BlowUp ? "blow-up" : "no-blow-up", r.T_eps,
                                  r.t_stop, r.u_max, r.points.size());
    if (r.points.empty()) fmt::print(os, "{},,,,\n", head);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      fmt::print(os, "{},{},{:.12g},{:.12g},{:.12g}\n", head, i, r.points[i][0], r.points[i][1],
                 r.points[i][2]);
    }
  }
}

void write_comparisons(const ExperimentConfig& cfg, const std::vector<Comparison>& cmp) {
  const fs::path out = cfg.out_dir;
  auto os = open_out(out / "compare.csv");
  os << "eps,predicted,computed,agree,pred_index,comp_index,pred_x,pred_y,comp_x,comp_y,distance\n";
  for (const auto& c : cmp) {
    const auto head = fmt::format("{:.10g},{},{},{}", c.eps,
                                  c.curve ? std::string("curve") : std::to_string(c.predicted),
                                  c.computed, c.agree ? 1 : 0);
    if (c.matches.empty()) fmt::print(os, "{},,,,,,,\n", head);
    for (const auto& m : c.matches) {
      auto num = [](bool on, double v) { return on ? fmt::format("{:.10g}", v) : std::string(); };
      const bool hp = m.predicted >= 0 || c.curve, hc = m.computed >= 0;
      fmt::print(os, "{},{},{},{},{},{},{},{}\n", head,
                 m.predicted >= 0 ? std::to_string(m.predicted) : "",
                 hc ? std::to_string(m.computed) : "", num(hp, m.pred.x()), num(hp, m.pred.y()),
                 num(hc, m.comp.x()), num(hc, m.comp.y()), num(hp && hc, m.distance));
    }
  }
  if (cfg.wants("svg")) {
    double lo = INFINITY, hi = -INFINITY;
    std::vector<double> px, py, cx, cy;
    for (const auto& c : cmp)
      for (const auto& m : c.matches) {
        if (m.predicted >= 0 || c.curve) px.push_back(m.pred.x()), py.push_back(m.pred.y());
        if (m.computed >= 0) cx.push_back(m.comp.x()), cy.push_back(m.comp.y());
      }
    for (const auto* v : {&px, &py, &cx, &cy})
      for (double x : *v) lo = std::min(lo, x), hi = std::max(hi, x);
    if (!(lo < hi)) lo = -1.0, hi = 1.0;
    SvgPlot plot(lo - 0.1, hi + 0.1, lo - 0.1, hi + 0.1, cfg.geometry + ": predicted vs computed");
    plot.points(px, py, "#1f77b4", true);
    plot.points(cx, cy, "#d62728");
    plot.legend("predicted", "#1f77b4");
    plot.legend("computed", "#d62728");
    write_text(out / "compare.svg", plot.str());
  }
}

std::vector<SolvedRun> solve_all(const ExperimentConfig& cfg) {
  for (double e : cfg.eps) (void)cfg.solver_for(e);  // validate before any work
  std::vector<SolvedRun> runs(cfg.eps.size());
  parallel_for(cfg.eps.size(), [&](std::size_t i) { runs[i] = run_solver(cfg, cfg.eps[i]); });
  write_solve_table(fs::path(cfg.out_dir) / "solve.csv", runs);
  return runs;
}

}  // namespace

void cmd_profile(int order, const fs::path& out) {
  if (order != 2 && order != 4) throw ConfigError("--order must be 2 or 4", -1, "order");
  const LayerProfile prof = order == 4 ? solve_profile4() : LayerProfile::second_order();
  {
    auto os = open_out(out / fmt::format("profile_order{}.csv", order));
    write_profile_csv(os, prof, order == 4 ? 0.0 : 0.01);
  }
  auto os = open_out(out / fmt::format("profile_order{}_summary.txt", order));
  fmt::print(os, "order: {}\n", order);
  if (order == 4) {
    fmt::print(os, "eta0: {:.10f}\n", prof.peak().eta);
    fmt::print(os, "v_eta0: {:.10f}\n", prof.peak().value);
    fmt::print(os, "omega: {:.15g}\n", prof.tail().rate);
    fmt::print(os, "tail_amplitude: {:.10g}\n", prof.tail().amplitude);
    fmt::print(os, "tail_phase: {:.10g}\n", prof.tail().phase);
    fmt::print(os, "eta_max: {:g}\n", prof.eta_max());
    fmt::print(os, "step: {:g}\n", prof.step());
    fmt::print(os, "residual: {:.3e}\n", prof.residual());
  } else {
    fmt::print(os, "form: closed\n");
    fmt::print(os, "v(2): {:.10f}\n", v2(2.0));
  }
}

std::vector<PredictedRun> cmd_predict(const ExperimentConfig& cfg) {
  const auto ctx = make_context(cfg);
  const double T = time_for_prediction(cfg, ctx.rs);
  std::vector<PredictedRun> runs(cfg.eps.size());
  parallel_for(cfg.eps.size(), [&](std::size_t i) {
    runs[i] = {cfg.eps[i], predict_one(cfg, ctx, cfg.eps[i], T, false)};
  });
  write_text(fs::path(cfg.out_dir) / "config.yaml", echo_config(cfg));
  write_predictions(cfg, ctx, runs);
  return runs;
}

std::vector<SolvedRun> cmd_solve(const ExperimentConfig& cfg) {
  auto runs = solve_all(cfg);
  write_text(fs::path(cfg.out_dir) / "config.yaml", echo_config(cfg));
  return runs;
}

std::vector<Comparison> cmd_sweep(const ExperimentConfig& cfg, std::vector<SolvedRun>* out_runs) {
  const auto ctx = make_context(cfg);
  auto runs = solve_all(cfg);
  std::vector<PredictedRun> preds(runs.size());
  std::vector<Comparison> cmp(runs.size());
  parallel_for(runs.size(), [&](std::size_t i) {
    const bool measured = runs[i].outcome == Outcome::BlowUp;
    const double T = measured ? runs[i].T_eps : time_for_prediction(cfg, ctx.rs);
    preds[i] = {runs[i].eps, predict_one(cfg, ctx, runs[i].eps, T, measured)};
    cmp[i] = compare_run(preds[i], runs[i]);
  });
  write_text(fs::path(cfg.out_dir) / "config.yaml", echo_config(cfg));
  write_predictions(cfg, ctx, preds);
  write_comparisons(cfg, cmp);
  if (out_runs) *out_runs = std::move(runs);
  return cmp;
}

std::vector<Comparison> cmd_compare(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out_dir;
  if (read_text(out / "config.yaml") != echo_config(cfg)) {
    throw ConfigError(fmt::format("'{}' was produced by a different config", (out / "config.yaml").string()),
                      -1, "config");
  }
  std::map<double, PredictedRun> preds;
  for (const auto& row : read_csv(out / "predictions.csv")) {
    if (row.size() < 10) throw ConfigError("predictions.csv: malformed row");
    const double eps = std::stod(row[2]);
    auto& pr = preds[eps];
    pr.eps = eps;
    auto& p = pr.prediction;
    p.regime = regime_from_name(row[0]);
    p.order = row[1] == "4" ? Order::Fourth : Order::Second;
    p.eps = eps;
    p.T_eps = std::stod(row[3]);
    p.T_eps_measured = row[4] == "solver";
    p.T_S = std::stod(row[5]);
    p.level = std::stod(row[6]);
    if (!row[7].empty()) p.points.emplace_back(std::stod(row[8]), std::stod(row[9]));
  }
  for (auto& [eps, pr] : preds) {
    if (pr.prediction.regime != Regime::OmegaSet) continue;
    std::map<int, LevelCurve> curves;
    for (const auto& row : read_csv(out / fmt::format("omega_{}.csv", eps_tag(eps)))) {
      curves[std::stoi(row[0])].points.emplace_back(std::stod(row[1]), std::stod(row[2]));
    }
    for (auto& [id, c] : curves) pr.prediction.curves.push_back(std::move(c));
  }
  std::map<double, SolvedRun> solved;
  for (const auto& row : read_csv(out / "solve.csv")) {
    if (row.size() < 10) throw ConfigError("solve.csv: malformed row");
    const double eps = std::stod(row[0]);
    auto& r = solved[eps];
    r.eps = eps;
    r.outcome = row[1] == "blow-up" ? Outcome::BlowUp : Outcome::NoBlowUp;
    r.T_eps = std::stod(row[2]);
    r.t_stop = std::stod(row[3]);
    r.u_max = std::stod(row[4]);
    if (!row[6].empty()) r.points.emplace_back(std::stod(row[7]), std::stod(row[8]), std::stod(row[9]));
  }
  std::vector<Comparison> cmp;
  for (double eps : cfg.eps) {
    if (!preds.count(eps) || !solved.count(eps)) {
      throw ConfigError(fmt::format("no prediction or solve output for eps = {:g}", eps), -1, "eps");
    }
    cmp.push_back(compare_run(preds[eps], solved[eps]));
  }
  write_comparisons(cfg, cmp);
  return cmp;
}

Comparison compare_run(const PredictedRun& pred, const SolvedRun& run) {
  Comparison c;
  c.eps = pred.eps;
  const auto& p = pred.prediction;
  std::vector<Point> comp;
  for (const auto& x : run.points) comp.emplace_back(x[0], x[1]);
  c.computed = comp.size();

  if (p.points.empty() && !p.curves.empty()) {
    // Level-curve prediction: distance from each computed point to the curve.
    c.curve = true;
    c.agree = !comp.empty();
    for (std::size_t j = 0; j < comp.size(); ++j) {
      Comparison::Match m;
      m.computed = static_cast<int>(j);
      m.comp = comp[j];
      m.distance = INFINITY;
      for (const auto& curve : p.curves)
        for (const auto& q : curve.points)
          if ((q - comp[j]).norm() < m.distance) m.distance = (q - comp[j]).norm(), m.pred = q;
      c.matches.push_back(m);
    }
    return c;
  }

  c.predicted = p.points.size();
  c.agree = c.predicted == c.computed;
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < p.points.size(); ++i)
    for (std::size_t j = 0; j < comp.size(); ++j)
      pairs.emplace_back((p.points[i] - comp[j]).norm(), i, j);
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> pi(p.points.size()), cj(comp.size());
  for (const auto& [d, i, j] : pairs) {
    if (pi[i] || cj[j]) continue;
    pi[i] = cj[j] = true;
    c.matches.push_back({static_cast<int>(i), static_cast<int>(j), p.points[i], comp[j], d});
  }
  for (std::size_t i = 0; i < pi.size(); ++i)
    if (!pi[i]) c.matches.push_back({static_cast<int>(i), -1, p.points[i], Point::Zero(), 0.0});
  for (std::size_t j = 0; j < cj.size(); ++j)
    if (!cj[j]) c.matches.push_back({-1, static_cast<int>(j), Point::Zero(), comp[j], 0.0});
  std::sort(c.matches.begin(), c.matches.end(), [](const auto& a, const auto& b) {
    return std::tie(a.predicted, a.computed) < std::tie(b.predicted, b.computed);
  });
  return c;
}

}  // namespace lab
