#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "blowup/errors.hpp"
#include "blowup/reaction.hpp"

namespace lab {

using blowup::ConfigError;

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : -1; }

[[noreturn]] void fail(const YAML::Node& n, const std::string& key, const std::string& msg) {
  const int line = line_of(n);
  throw ConfigError(line > 0 ? fmt::format("line {}: {}: {}", line, key, msg)
                             : fmt::format("{}: {}", key, msg),
                    line, key);
}

void require_map(const YAML::Node& n, const std::string& key) {
  if (!n.IsMap()) fail(n, key, "expected a mapping");
}

void reject_unknown(const YAML::Node& map, const std::string& prefix,
                    const std::set<std::string>& allowed) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      fail(kv.first, prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
  }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, key, "expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, key, fmt::format("cannot read '{}'", n.Scalar()));
  }
}

std::vector<double> number_list(const YAML::Node& n, const std::string& key) {
  std::vector<double> out;
  if (n.IsScalar()) {
    out.push_back(scalar<double>(n, key));
  } else if (n.IsSequence()) {
    for (const auto& item : n) out.push_back(scalar<double>(item, key));
  } else {
    fail(n, key, "expected a number or a list of numbers");
  }
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.17g}", i ? ", " : "", v[i]);
  return s + "]";
}

void parse_solver(const YAML::Node& n, ExperimentConfig& cfg) {
  require_map(n, "solver");
  reject_unknown(n, "solver",
                 {"nodes", "nodes_y", "nodes_z", "grading", "dt", "dt_min", "safety", "rtol",
                  "growth", "threshold", "max_steps", "t_max", "noise", "seed", "sample_times",
                  "peak_fraction", "peak_separation"});
  auto& s = cfg.solver;
  auto get = [&](const char* key, auto& field) {
    if (n[key]) field = scalar<std::decay_t<decltype(field)>>(n[key], std::string("solver.") + key);
  };
  if (n["nodes"]) cfg.nodes_set = true;
  get("nodes", s.nodes);
  get("nodes_y", s.nodes_y);
  get("nodes_z", s.nodes_z);
  get("grading", s.grading);
  get("dt", s.dt_initial);
  get("dt_min", s.dt_min);
  get("safety", s.safety);
  get("rtol", s.rtol);
  get("growth", s.growth);
  get("threshold", s.threshold);
  get("max_steps", s.max_steps);
  get("t_max", s.t_max);
  get("noise", s.noise);
  get("seed", s.seed);
  get("peak_fraction", s.peak_fraction);
  get("peak_separation", s.peak_separation);
  if (n["sample_times"]) s.sample_times = number_list(n["sample_times"], "solver.sample_times");
}

}  // namespace

std::optional<blowup::PlanarDomain> ExperimentConfig::domain() const {
  if (is_strip() || is_cube()) return std::nullopt;
  if (geometry == "radial_disc") return blowup::PlanarDomain::disc();
  return blowup::PlanarDomain::parse(geometry);
}

blowup::SolverConfig ExperimentConfig::solver_for(double e) const {
  blowup::SolverConfig s = solver;
  s.order = order;
  s.nonlinearity = blowup::Nonlinearity::parse(nonlinearity);
  s.eps = e;
  int default_nodes = 0;
  if (is_strip()) {
    s.geometry = blowup::GeometryKind::Strip;
    default_nodes = 2001;
  } else if (is_cube()) {
    s.geometry = blowup::GeometryKind::Cube;
    default_nodes = 41;
  } else {
    const auto dom = *domain();
    if (geometry == "radial_disc" || (dom.is_circle() && dom.shape() == blowup::PlanarDomain::Shape::Polar)) {
      s.geometry = blowup::GeometryKind::RadialDisc;
      default_nodes = 1000;
    } else if (dom.shape() == blowup::PlanarDomain::Shape::Rectangle) {
      s.geometry = blowup::GeometryKind::Rect;
      const auto b = dom.bounds();
      s.xmin = b.min().x();
      s.xmax = b.max().x();
      s.ymin = b.min().y();
      s.ymax = b.max().y();
      default_nodes = 201;
    } else {
      throw ConfigError(fmt::format("geometry '{}' has no PDE solver (strip, rectangles, discs and "
                                    "the cube are supported)",
                                    geometry),
                        -1, "geometry");
    }
  }
  if (!nodes_set) s.nodes = default_nodes;
  s.validate();
  return s;
}

bool ExperimentConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("line {}: {}", e.mark.line + 1, e.msg), e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");
  reject_unknown(root, "",
                 {"nonlinearity", "order", "geometry", "eps", "solver", "predictor", "outputs"});

  ExperimentConfig cfg;
  if (root["nonlinearity"]) {
    cfg.nonlinearity = scalar<std::string>(root["nonlinearity"], "nonlinearity");
    try {
      (void)blowup::Nonlinearity::parse(cfg.nonlinearity);
    } catch (const blowup::Error& e) {
      fail(root["nonlinearity"], "nonlinearity", e.what());
    }
  }
  if (root["order"]) {
    const int o = scalar<int>(root["order"], "order");
    if (o != 2 && o != 4) fail(root["order"], "order", "must be 2 or 4");
    cfg.order = o == 2 ? Order::Second : Order::Fourth;
  }
  if (root["geometry"]) {
    cfg.geometry = scalar<std::string>(root["geometry"], "geometry");
    try {
      (void)cfg.domain();
    } catch (const blowup::Error& e) {
      fail(root["geometry"], "geometry", e.what());
    }
  }
  if (!root["eps"]) throw ConfigError("eps: missing", -1, "eps");
  cfg.eps = number_list(root["eps"], "eps");
  if (cfg.eps.empty()) fail(root["eps"], "eps", "the sweep is empty");
  for (double e : cfg.eps)
    if (!(e >= 0.0)) fail(root["eps"], "eps", "values must be non-negative");
  std::sort(cfg.eps.begin(), cfg.eps.end());
  if (std::adjacent_find(cfg.eps.begin(), cfg.eps.end()) != cfg.eps.end()) {
    fail(root["eps"], "eps", "duplicate values");
  }

  if (root["solver"]) parse_solver(root["solver"], cfg);
  if (const auto p = root["predictor"]) {
    require_map(p, "predictor");
    reject_unknown(p, "predictor", {"resolution", "T_eps"});
    if (p["resolution"]) cfg.resolution = scalar<double>(p["resolution"], "predictor.resolution");
    if (!(cfg.resolution > 0.0)) fail(p["resolution"], "predictor.resolution", "must be positive");
    if (p["T_eps"]) {
      const auto s = scalar<std::string>(p["T_eps"], "predictor.T_eps");
      if (s != "T0") {
        const double t = scalar<double>(p["T_eps"], "predictor.T_eps");
        if (!(t > 0.0)) fail(p["T_eps"], "predictor.T_eps", "must be positive or T0");
        cfg.T_eps = t;
      }
    }
  }
  if (const auto o = root["outputs"]) {
    require_map(o, "outputs");
    reject_unknown(o, "outputs", {"directory", "snapshot_stride", "formats"});
    if (o["directory"]) cfg.out_dir = scalar<std::string>(o["directory"], "outputs.directory");
    if (o["snapshot_stride"]) {
      cfg.solver.snapshot_stride = scalar<int>(o["snapshot_stride"], "outputs.snapshot_stride");
      if (cfg.solver.snapshot_stride < 0) fail(o["snapshot_stride"], "outputs.snapshot_stride", "must be >= 0");
    }
    if (o["formats"]) {
      const auto f = o["formats"];
      if (!f.IsSequence()) fail(f, "outputs.formats", "expected a list");
      cfg.formats.clear();
      for (const auto& item : f) {
        const auto s = scalar<std::string>(item, "outputs.formats");
        if (s != "csv" && s != "svg") fail(item, "outputs.formats", "known formats are csv and svg");
        cfg.formats.push_back(s);
      }
    }
  }

  try {
    auto probe = cfg.solver;
    probe.eps = cfg.eps.front();
    probe.validate();
  } catch (const ConfigError& e) {
    const std::string key = "solver." + e.key();
    const auto node = root["solver"] ? root["solver"] : root;
    fail(node, key, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const ExperimentConfig& c) {
  const auto& s = c.solver;
  std::string out;
  out += fmt::format("nonlinearity: \"{}\"\n", c.nonlinearity);
  out += fmt::format("order: {}\n", c.order == Order::Fourth ? 4 : 2);
  out += fmt::format("geometry: \"{}\"\n", c.geometry);
  out += fmt::format("eps: {}\n", fmt_list(c.eps));
  out += "solver:\n";
  if (c.nodes_set) out += fmt::format("  nodes: {}\n", s.nodes);
  out += fmt::format("  nodes_y: {}\n  nodes_z: {}\n", s.nodes_y, s.nodes_z);
  out += fmt::format("  grading: {:.17g}\n", s.grading);
  out += fmt::format("  dt: {:.17g}\n  dt_min: {:.17g}\n", s.dt_initial, s.dt_min);
  out += fmt::format("  safety: {:.17g}\n  rtol: {:.17g}\n  growth: {:.17g}\n", s.safety, s.rtol,
                     s.growth);
  out += fmt::format("  threshold: {:.17g}\n  max_steps: {}\n  t_max: {:.17g}\n", s.threshold,
                     s.max_steps, s.t_max);
  out += fmt::format("  noise: {:.17g}\n  seed: {}\n", s.noise, s.seed);
  out += fmt::format("  sample_times: {}\n", fmt_list(s.sample_times));
  out += fmt::format("  peak_fraction: {:.17g}\n  peak_separation: {:.17g}\n", s.peak_fraction,
                     s.peak_separation);
  out += "predictor:\n";
  out += fmt::format("  resolution: {:.17g}\n", c.resolution);
  out += c.T_eps ? fmt::format("  T_eps: {:.17g}\n", *c.T_eps) : "  T_eps: T0\n";
  out += "outputs:\n";
  out += fmt::format("  directory: \"{}\"\n", c.out_dir);
  out += fmt::format("  snapshot_stride: {}\n", s.snapshot_stride);
  out += "  formats: [";
  for (std::size_t i = 0; i < c.formats.size(); ++i) out += (i ? ", " : "") + c.formats[i];
  out += "]\n";
  return out;
}

}  // namespace lab
