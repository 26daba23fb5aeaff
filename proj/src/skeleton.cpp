#include "blowup/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "blowup/errors.hpp"
#include "blowup/parallel.hpp"

namespace blowup {

namespace {

constexpr double kParamMatch = 0.5;  // radians a tracked foot may move between neighbours

double circular_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

bool same_foot(const Foot& a, const Foot& b) {
  if (a.edge >= 0 || b.edge >= 0) return a.edge == b.edge;
  return circular_gap(a.param, b.param) <= kParamMatch;
}

// Index of the foot in `set` continuing `f`, or -1.
int track(const Foot& f, const FootSet& set) {
  int best = -1;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.feet.size(); ++i) {
    const Foot& g = set.feet[i];
    if (!same_foot(f, g)) continue;
    const double d = f.edge >= 0 ? 0.0 : circular_gap(f.param, g.param);
    if (d < gap) {
      gap = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// Equidistant pairs of a foot set, in a deterministic order.
std::vector<FootPair> equidistant_pairs(const FootSet& set, double tol) {
  std::vector<FootPair> out;
  if (set.circle) {
    Foot a, b;
    a.y = {set.circle_radius, 0.0};
    b.y = {-set.circle_radius, 0.0};
    a.param = 0.0;
    b.param = std::numbers::pi;
    a.distance = b.distance = set.circle_radius;
    a.curvature = b.curvature = 1.0 / set.circle_radius;
    out.push_back({a, b, set.circle_radius});
    return out;
  }
  for (std::size_t i = 0; i < set.feet.size(); ++i) {
    for (std::size_t j = i + 1; j < set.feet.size(); ++j) {
      const Foot& a = set.feet[i];
      const Foot& b = set.feet[j];
      if (std::abs(a.distance - b.distance) <= tol) {
        out.push_back({a, b, 0.5 * (a.distance + b.distance)});
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const FootPair& p, const FootPair& q) { return p.distance < q.distance; });
  return out;
}

std::optional<SkeletonSample> make_sample(const PlanarDomain& dom, const Point& x, double tol) {
  const FootSet set = dom.orthogonal_feet(x);
  auto pairs = equidistant_pairs(set, tol);
  if (pairs.empty()) return std::nullopt;
  SkeletonSample s;
  s.x = x;
  s.s = pairs.front().distance;
  s.distance = dom.distance_to_boundary(x);
  s.medial = s.s <= s.distance + tol;
  s.pairs = std::move(pairs);
  return s;
}

// Bisects the segment [p, q] on d_a - d_b, tracking both feet from the p side.
std::optional<Point> bisect(const PlanarDomain& dom, Point lo, Point hi, Foot a, Foot b) {
  double glo = a.distance - b.distance;
  const double stop = 1e-12 * dom.diameter();
  for (int it = 0; it < 80; ++it) {
    const Point m = 0.5 * (lo + hi);
    const FootSet set = dom.orthogonal_feet(m);
    if (set.circle) return m;
    const int ia = track(a, set), ib = track(b, set);
    if (ia < 0 || ib < 0 || ia == ib) return std::nullopt;
    const double gm = set.feet[ia].distance - set.feet[ib].distance;
    if (std::abs(gm) <= stop || (hi - lo).norm() <= stop) return m;
    if (gm * glo > 0.0) {
      lo = m;
      glo = gm;
      a = set.feet[ia];
      b = set.feet[ib];
    } else {
      hi = m;
    }
  }
  return 0.5 * (lo + hi);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool compatible(const FootPair& p, const FootPair& q) {
  return (same_foot(p.first, q.first) && same_foot(p.second, q.second)) ||
         (same_foot(p.first, q.second) && same_foot(p.second, q.first));
}

}  // namespace

double Skeleton::s_min(bool medial_only) const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    if (!medial_only || x.medial) s = std::min(s, x.s);
  }
  return s;
}

Skeleton compute_skeleton(const PlanarDomain& dom, double resolution) {
  if (!(resolution > 0.0)) throw GeometryError("skeleton resolution must be positive");
  const double tol = 1e-6 * dom.diameter();
  const auto box = dom.bounds();
  const long i0 = static_cast<long>(std::ceil(box.min().x() / resolution));
  const long i1 = static_cast<long>(std::floor(box.max().x() / resolution));
  const long j0 = static_cast<long>(std::ceil(box.min().y() / resolution));
  const long j1 = static_cast<long>(std::floor(box.max().y() / resolution));
  const long nx = i1 - i0 + 1, ny = j1 - j0 + 1;
  if (nx * ny > 4'000'000) throw GeometryError("skeleton grid too fine");

  auto node = [&](long i, long j) { return Point((i0 + i) * resolution, (j0 + j) * resolution); };
  const auto count = static_cast<std::size_t>(nx * ny);
  std::vector<char> inside(count, 0);
  std::vector<FootSet> feet(count);
  parallel_for(count, [&](std::size_t k) {
    const Point x = node(static_cast<long>(k) % nx, static_cast<long>(k) / nx);
    if (!dom.contains(x)) return;
    inside[k] = 1;
    feet[k] = dom.orthogonal_feet(x);
  });

  std::vector<std::vector<SkeletonSample>> found(count);
  parallel_for(count, [&](std::size_t k) {
    if (!inside[k]) return;
    const long i = static_cast<long>(k) % nx, j = static_cast<long>(k) / nx;
    const Point p = node(i, j);
    if (auto s = make_sample(dom, p, tol)) found[k].push_back(std::move(*s));
    const FootSet& fp = feet[k];
    if (fp.circle) return;
    for (int dir = 0; dir < 2; ++dir) {
      const long qi = i + (dir == 0), qj = j + (dir == 1);
      if (qi >= nx || qj >= ny) continue;
      const auto kq = static_cast<std::size_t>(qj * nx + qi);
      if (!inside[kq] || feet[kq].circle) continue;
      const FootSet& fq = feet[kq];
      for (std::size_t a = 0; a < fp.feet.size(); ++a) {
        for (std::size_t b = a + 1; b < fp.feet.size(); ++b) {
          const int qa = track(fp.feet[a], fq), qb = track(fp.feet[b], fq);
          if (qa < 0 || qb < 0 || qa == qb) continue;
          const double gp = fp.feet[a].distance - fp.feet[b].distance;
          const double gq = fq.feet[qa].distance - fq.feet[qb].distance;
          if (!(gp * gq < 0.0)) continue;
          const auto z = bisect(dom, p, node(qi, qj), fp.feet[a], fp.feet[b]);
          if (!z) continue;
          if (auto s = make_sample(dom, *z, tol)) found[k].push_back(std::move(*s));
        }
      }
    }
  });

  Skeleton sk;
  sk.resolution = resolution;
  sk.tolerance = tol;
  for (auto& list : found) {
    for (auto& s : list) sk.samples.push_back(std::move(s));
  }
  if (sk.samples.empty()) {
    throw GeometryError(fmt::format("no skeleton found on {} at resolution {}", dom.spec(), resolution));
  }
  std::sort(sk.samples.begin(), sk.samples.end(), [](const auto& a, const auto& b) {
    return a.x.x() != b.x.x() ? a.x.x() < b.x.x() : a.x.y() < b.x.y();
  });
  {
    const double dup = 1e-9 * dom.diameter();
    std::vector<SkeletonSample> unique;
    for (auto& s : sk.samples) {
      bool seen = false;
      for (auto it = unique.rbegin(); it != unique.rend() && s.x.x() - it->x.x() <= dup; ++it) {
        if ((it->x - s.x).norm() <= dup) {
          seen = true;
          break;
        }
      }
      if (!seen) unique.push_back(std::move(s));
    }
    sk.samples = std::move(unique);
  }

  // Branches: nearby samples whose realizing pairs continue each other.
  const auto n = sk.samples.size();
  UnionFind uf(n);
  const double link = 2.0 * resolution;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n && sk.samples[b].x.x() - sk.samples[a].x.x() <= link; ++b) {
      const auto& sa = sk.samples[a];
      const auto& sb = sk.samples[b];
      if ((sa.x - sb.x).norm() > link || sa.medial != sb.medial) continue;
      if (compatible(sa.pairs.front(), sb.pairs.front())) uf.unite(static_cast<int>(a), static_cast<int>(b));
    }
  }
  std::unordered_map<int, int> label;
  for (std::size_t a = 0; a < n; ++a) {
    const int root = uf.find(static_cast<int>(a));
    auto [it, fresh] = label.try_emplace(root, static_cast<int>(label.size()));
    sk.samples[a].branch = it->second;
  }
  sk.branch_count = static_cast<int>(label.size());
  return sk;
}

// ---------------------------------------------------------------------------
// Level sets

std::vector<LevelCurve> omega_set(const PlanarDomain& dom, double level, double resolution) {
  if (!(level > 0.0) || !(resolution > 0.0)) {
    throw GeometryError("omega_set needs a positive level and resolution");
  }
  const auto box = dom.bounds();
  const Point origin = box.min() - Point(resolution, resolution);
  const long nx = static_cast<long>(std::ceil(box.sizes().x() / resolution)) + 3;
  const long ny = static_cast<long>(std::ceil(box.sizes().y() / resolution)) + 3;
  const auto count = static_cast<std::size_t>(nx * ny);
  auto node = [&](long i, long j) { return Point(origin.x() + i * resolution, origin.y() + j * resolution); };
  std::vector<double> d(count, 0.0);
  parallel_for(count, [&](std::size_t k) {
    const Point x = node(static_cast<long>(k) % nx, static_cast<long>(k) / nx);
    d[k] = dom.contains(x) ? dom.distance_to_boundary(x) : 0.0;
  });
  auto val = [&](long i, long j) { return d[static_cast<std::size_t>(j * nx + i)]; };

  struct Segment {
    long e0, e1;
    Point p0, p1;
  };
  std::vector<Segment> segs;
  auto hedge = [&](long i, long j) { return 2 * (j * nx + i); };
  auto vedge = [&](long i, long j) { return 2 * (j * nx + i) + 1; };
  auto cross = [&](const Point& a, const Point& b, double va, double vb) {
    return Point(a + (level - va) / (vb - va) * (b - a));
  };
  for (long j = 0; j + 1 < ny; ++j) {
    for (long i = 0; i + 1 < nx; ++i) {
      const double v[4] = {val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
      const Point c[4] = {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
      const bool up[4] = {v[0] > level, v[1] > level, v[2] > level, v[3] > level};
      // Edges: bottom 0-1, right 1-2, top 3-2, left 0-3.
      const long eid[4] = {hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)};
      const int ends[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
      std::vector<int> hit;
      Point at[4];
      for (int e = 0; e < 4; ++e) {
        const int a = ends[e][0], b = ends[e][1];
        if (up[a] != up[b]) {
          hit.push_back(e);
          at[e] = cross(c[a], c[b], v[a], v[b]);
        }
      }
      if (hit.size() == 2) {
        segs.push_back({eid[hit[0]], eid[hit[1]], at[hit[0]], at[hit[1]]});
      } else if (hit.size() == 4) {
        const bool centre = 0.25 * (v[0] + v[1] + v[2] + v[3]) > level;
        const bool cut_odd = up[0] == centre;  // separate corners 1 and 3
        if (cut_odd) {
          segs.push_back({eid[0], eid[1], at[0], at[1]});
          segs.push_back({eid[2], eid[3], at[2], at[3]});
        } else {
          segs.push_back({eid[3], eid[0], at[3], at[0]});
          segs.push_back({eid[1], eid[2], at[1], at[2]});
        }
      }
    }
  }

  std::unordered_map<long, std::vector<std::size_t>> by_edge;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    by_edge[segs[s].e0].push_back(s);
    by_edge[segs[s].e1].push_back(s);
  }
  std::vector<char> used(segs.size(), 0);
  std::vector<LevelCurve> curves;
  auto extend = [&](std::deque<Point>& pts, long edge, bool back) {
    while (true) {
      std::size_t next = segs.size();
      for (auto s : by_edge[edge]) {
        if (!used[s]) next = s;
      }
      if (next == segs.size()) return edge;
      used[next] = 1;
      const Segment& sg = segs[next];
      const bool forward = sg.e0 == edge;
      const Point p = forward ? sg.p1 : sg.p0;
      edge = forward ? sg.e1 : sg.e0;
      if (back) pts.push_back(p);
      else pts.push_front(p);
    }
  };
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (used[s]) continue;
    used[s] = 1;
    std::deque<Point> pts{segs[s].p0, segs[s].p1};
    const long tail = extend(pts, segs[s].e1, true);
    const long head = extend(pts, segs[s].e0, false);
    LevelCurve c;
    c.closed = tail == head || (pts.front() - pts.back()).norm() <= 1e-12;
    c.points.assign(pts.begin(), pts.end());
    curves.push_back(std::move(c));
  }
  return curves;
}

double skeleton_arrival_time(const Skeleton& skeleton, const ReactionSolution& rs, double eps,
                             Order order, double eta0) {
  if (!(eps > 0.0) || !(eta0 > 0.0)) throw DomainError("arrival time needs eps > 0 and eta0 > 0");
  const double s = skeleton.s_min(true);
  if (s <= 1.5 * skeleton.resolution) return 0.0;
  // eta0 eps u0^(1/2) = s (second order) or eta0 eps u0^(1/4) = s (fourth order).
  const double ratio = s / (eta0 * eps);
  const double u = order == Order::Fourth ? std::pow(ratio, 4) : ratio * ratio;
  return rs.invert(u);
}

void write_skeleton_csv(std::ostream& os, const Skeleton& skeleton) {
  os << "x,y,s,distance,medial,branch,pairs\n";
  for (const auto& s : skeleton.samples) {
    fmt::print(os, "{:.10g},{:.10g},{:.10g},{:.10g},{},{},{}\n", s.x.x(), s.x.y(), s.s, s.distance,
               s.medial ? 1 : 0, s.branch, s.pairs.size());
  }
}

void write_level_csv(std::ostream& os, const std::vector<LevelCurve>& curves) {
  os << "curve,x,y\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (const auto& p : curves[c].points) fmt::print(os, "{},{:.10g},{:.10g}\n", c, p.x(), p.y());
  }
}

}  // namespace blowup
