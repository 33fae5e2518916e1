// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "bhcoop/conic.hpp"
#include "bhcoop/model.hpp"

// Rate-region boundary machinery: backhaul-induced private loads, the
// candidate polyhedron of user-1 private rates, per-scheme feasibility of a
// rate pair through the power-minimization relaxation, and bisection along
// rate profiles r_1 = alpha r, r_2 = (1 - alpha) r.

namespace bhcoop {

// FRS: free private/shared split.  ARS: private rates only from the own BS.
// IC: everything private to the own BS.  NM: everything shared.
enum class SchemeKind { FRS, ARS, IC, NM };

inline std::string to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::FRS: return "FRS";
    case SchemeKind::ARS: return "ARS";
    case SchemeKind::IC: return "IC";
    case SchemeKind::NM: return "NM";
  }
  return "?";
}

inline SchemeKind scheme_from_string(const std::string& s) {
  if (s == "FRS") return SchemeKind::FRS;
  if (s == "ARS") return SchemeKind::ARS;
  if (s == "IC") return SchemeKind::IC;
  if (s == "NM") return SchemeKind::NM;
  throw std::invalid_argument("unknown scheme: " + s);
}

// Minimum total private rate each BS must carry for a rate pair:
// c_j = max(0, r_1 + r_2 - C_other(j)).  Whatever the other link cannot
// carry of the total traffic must ride privately on this one.
struct PrivateLoad {
  std::array<double, 2> c{0.0, 0.0};
};

inline PrivateLoad private_load(const SystemConfig& cfg,
                                const std::array<double, 2>& r_pair) {
  if (r_pair[0] < 0.0 || r_pair[1] < 0.0)
    throw std::invalid_argument("private_load: negative rate");
  const double sum = r_pair[0] + r_pair[1];
  PrivateLoad load;
  for (int j = 0; j < 2; ++j) load.c[j] = std::max(0.0, sum - cfg.c_bh[other(j)]);
  return load;
}

// Vertices of the user-1 private-rate polyhedron
//   0 <= x <= c_1,  0 <= y <= c_2,  c_1 + c_2 - r_2 <= x + y <= r_1,
// with (x, y) = (r_11p, r_12p) and the user-2 rates the complements
// (c_1 - x, c_2 - y).  Empty result means the rate pair is infeasible
// without touching the solver.
inline std::vector<std::array<double, 2>> corner_points(
    const PrivateLoad& load, const std::array<double, 2>& r_pair) {
  const double c1 = load.c[0], c2 = load.c[1];
  const double lo = c1 + c2 - r_pair[1];
  const double hi = r_pair[0];
  const double scale = std::max({1.0, c1, c2, r_pair[0], r_pair[1]});
  const double eps = 1e-9 * scale;

  std::vector<std::array<double, 2>> cand;
  for (double a : {0.0, c1})
    for (double b : {0.0, c2}) cand.push_back({a, b});
  for (double a : {0.0, c1})
    for (double s : {lo, hi}) cand.push_back({a, s - a});
  for (double b : {0.0, c2})
    for (double s : {lo, hi}) cand.push_back({s - b, b});

  std::vector<std::array<double, 2>> verts;
  for (auto [x, y] : cand) {
    if (x < -eps || x > c1 + eps || y < -eps || y > c2 + eps) continue;
    if (x + y < lo - eps || x + y > hi + eps) continue;
    x = std::clamp(x, 0.0, c1);
    y = std::clamp(y, 0.0, c2);
    bool dup = false;
    for (const auto& v : verts)
      if (std::abs(v[0] - x) <= eps && std::abs(v[1] - y) <= eps) dup = true;
    if (!dup) verts.push_back({x, y});
  }
  std::sort(verts.begin(), verts.end(), [](const auto& a, const auto& b) {
    const double sa = a[0] + a[1], sb = b[0] + b[1];
    if (sa != sb) return sa > sb;
    return a[0] < b[0];
  });
  return verts;
}

// Candidate ordering when several corners must be probed.  `automatic`
// starts nearest the all-shared point when (0,0) lies in the polyhedron,
// otherwise with the most private data first; feasibility search exits at
// the first feasible candidate either way.
enum class CornerOrder { automatic, shared_first, private_first };

struct RegionOptions {
  double tol_r = 1e-4;  // bisection resolution, bits/s/Hz
  int grid_k = 0;       // >0: probe a k x k interior grid after the corners
  CornerOrder corner_order = CornerOrder::automatic;
  SolverOptions solver;
};

struct RatePairResult {
  bool feasible = false;
  RateSplit split;
  std::optional<BeamformerSet> bf;
  double power = 0.0;
  int corner_index = -1;
  int solver_failures = 0;
  bool interior_counterexample = false;
  std::array<double, 2> interior_point{0.0, 0.0};
};

namespace detail {

// Absorb floating-point dust so the split passes strict validation while
// the per-BS loads stay intact to 1e-9.
inline RateSplit make_split(const std::array<double, 2>& r_pair,
                            const PrivateLoad& load, double x, double y) {
  RateSplit rs;
  rs.r = r_pair;
  rs.r_p[0][0] = std::max(0.0, x);
  rs.r_p[0][1] = std::max(0.0, y);
  rs.r_p[1][0] = std::max(0.0, load.c[0] - rs.r_p[0][0]);
  rs.r_p[1][1] = std::max(0.0, load.c[1] - rs.r_p[0][1]);
  for (int i = 0; i < 2; ++i) {
    const double over = rs.r_p[i][0] + rs.r_p[i][1] - rs.r[i];
    if (over > 0.0) {
      int jmax = rs.r_p[i][0] >= rs.r_p[i][1] ? 0 : 1;
      rs.r_p[i][jmax] = std::max(0.0, rs.r_p[i][jmax] - over);
    }
  }
  return rs;
}

}  // namespace detail

inline RatePairResult check_rate_pair(const SystemConfig& cfg, const ChannelState& ch,
                                      const std::array<double, 2>& r_pair,
                                      SchemeKind scheme,
                                      const RegionOptions& opt = {}) {
  if (r_pair[0] < 0.0 || r_pair[1] < 0.0)
    throw std::invalid_argument("check_rate_pair: negative rate");
  RatePairResult out;
  const double r = r_pair[0] + r_pair[1];
  if (r <= 1e-12) {
    out.feasible = true;
    out.split = RateSplit::zero();
    out.bf = BeamformerSet::zero(cfg.n_t);
    return out;
  }
  if (r > cfg.c_bh[0] + cfg.c_bh[1] + kRateTol) return out;

  const PrivateLoad load = private_load(cfg, r_pair);
  std::vector<RateSplit> candidates;

  switch (scheme) {
    case SchemeKind::IC: {
      if (r_pair[0] > cfg.c_bh[0] + kRateTol || r_pair[1] > cfg.c_bh[1] + kRateTol)
        return out;
      RateSplit rs;
      rs.r = r_pair;
      rs.r_p[0][0] = r_pair[0];
      rs.r_p[1][1] = r_pair[1];
      candidates.push_back(rs);
      break;
    }
    case SchemeKind::NM: {
      if (std::max(load.c[0], load.c[1]) > 1e-9) return out;
      RateSplit rs;
      rs.r = r_pair;
      candidates.push_back(rs);
      break;
    }
    case SchemeKind::ARS: {
      // x = c_1, y = 0 is the only split with no cross-BS private rates
      // under the load equalities; it exists when c_i <= r_i.
      if (load.c[0] > r_pair[0] + 1e-9 || load.c[1] > r_pair[1] + 1e-9) return out;
      candidates.push_back(detail::make_split(r_pair, load, load.c[0], 0.0));
      break;
    }
    case SchemeKind::FRS: {
      auto verts = corner_points(load, r_pair);
      if (verts.empty()) return out;
      const bool contains_origin = load.c[0] + load.c[1] - r_pair[1] <= 1e-12;
      const bool ascending = opt.corner_order == CornerOrder::shared_first ||
                             (opt.corner_order == CornerOrder::automatic &&
                              contains_origin);
      if (ascending) std::reverse(verts.begin(), verts.end());
      for (const auto& v : verts)
        candidates.push_back(detail::make_split(r_pair, load, v[0], v[1]));
      break;
    }
  }

  int idx = 0;
  for (const auto& split : candidates) {
    const ConicProblem prob = build_relaxation(cfg, ch, split);
    SolveResult res = solve(prob, opt.solver);
    if (res.status == SolveStatus::optimal) {
      out.feasible = true;
      out.split = split;
      out.bf = res.bf;
      out.power = res.objective;
      out.corner_index = idx;
      return out;
    }
    if (res.status == SolveStatus::numerical_failure) ++out.solver_failures;
    ++idx;
  }

  // Optional probe of the polyhedron interior: the corner search above is
  // believed sufficient, so an interior-only feasibility is worth reporting.
  if (scheme == SchemeKind::FRS && opt.grid_k > 0) {
    const double lo = load.c[0] + load.c[1] - r_pair[1];
    const double hi = r_pair[0];
    const double margin = 1e-9 * std::max(1.0, r);
    for (int a = 0; a < opt.grid_k; ++a)
      for (int b = 0; b < opt.grid_k; ++b) {
        const double x = (a + 0.5) / opt.grid_k * load.c[0];
        const double y = (b + 0.5) / opt.grid_k * load.c[1];
        if (x + y <= lo + margin || x + y >= hi - margin) continue;
        if (x <= margin || x >= load.c[0] - margin) continue;
        if (y <= margin || y >= load.c[1] - margin) continue;
        const RateSplit split = detail::make_split(r_pair, load, x, y);
        SolveResult res = solve(build_relaxation(cfg, ch, split), opt.solver);
        if (res.status == SolveStatus::optimal) {
          out.feasible = true;
          out.split = split;
          out.bf = res.bf;
          out.power = res.objective;
          out.interior_counterexample = true;
          out.interior_point = {x, y};
          return out;
        }
        if (res.status == SolveStatus::numerical_failure) ++out.solver_failures;
      }
  }
  return out;
}

struct BoundaryPoint {
  double alpha = 0.0;
  std::array<double, 2> r_pair{0.0, 0.0};
  RateSplit split;
  BeamformerSet bf;
  double private_fraction = 0.0;
  bool ok = true;
  int solver_failures = 0;
  bool interior_counterexample = false;
};

// Largest sum rate r (within tol_r) whose profile point (alpha r,
// (1-alpha) r) is feasible; bracketed by [0, C_1 + C_2] since the backhaul
// caps the sum rate and r = 0 is always feasible.
inline BoundaryPoint bisect_sum_rate(const SystemConfig& cfg, const ChannelState& ch,
                                     double alpha, SchemeKind scheme,
                                     const RegionOptions& opt = {}) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("bisect_sum_rate: alpha outside [0,1]");
  BoundaryPoint bp;
  bp.alpha = alpha;
  bp.split = RateSplit::zero();
  bp.bf = BeamformerSet::zero(cfg.n_t);

  auto probe = [&](double r) {
    return check_rate_pair(cfg, ch, {alpha * r, (1.0 - alpha) * r}, scheme, opt);
  };
  auto adopt = [&](double r, const RatePairResult& res) {
    bp.r_pair = {alpha * r, (1.0 - alpha) * r};
    bp.split = res.split;
    if (res.bf) bp.bf = *res.bf;
    bp.private_fraction = r > 0.0 ? res.split.private_sum() / r : 0.0;
    bp.interior_counterexample |= res.interior_counterexample;
  };

  double lo = 0.0;
  double hi = cfg.c_bh[0] + cfg.c_bh[1];
  if (hi <= 0.0) return bp;

  RatePairResult top = probe(hi);
  bp.solver_failures += top.solver_failures;
  if (top.feasible) {
    adopt(hi, top);
    return bp;
  }
  while (hi - lo > opt.tol_r) {
    const double mid = 0.5 * (lo + hi);
    RatePairResult res = probe(mid);
    bp.solver_failures += res.solver_failures;
    if (res.feasible) {
      lo = mid;
      adopt(mid, res);
    } else {
      hi = mid;
    }
  }
  return bp;
}

inline std::vector<double> uniform_alpha_grid(int n) {
  std::vector<double> grid;
  if (n <= 1) {
    grid.push_back(0.5);
    return grid;
  }
  grid.reserve(n);
  for (int i = 0; i < n; ++i) grid.push_back(static_cast<double>(i) / (n - 1));
  return grid;
}

// One boundary point per profile; no convexification between profiles.
// Per-alpha failures are recorded and the sweep continues.
inline std::vector<BoundaryPoint> region_boundary(
    const SystemConfig& cfg, const ChannelState& ch, SchemeKind scheme,
    const std::vector<double>& alpha_grid, const RegionOptions& opt = {},
    int threads = 1) {
  std::vector<BoundaryPoint> points(alpha_grid.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= alpha_grid.size()) return;
      try {
        points[i] = bisect_sum_rate(cfg, ch, alpha_grid[i], scheme, opt);
      } catch (const std::exception&) {
        points[i] = BoundaryPoint{};
        points[i].alpha = alpha_grid[i];
        points[i].ok = false;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return points;
}

namespace detail {

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

// CSV rows in the fixed column order
// alpha,r1,r2,r11p,r12p,r21p,r22p,private_fraction,scheme.
inline std::string boundary_csv(const std::vector<BoundaryPoint>& points,
                                const std::string& scheme_label) {
  std::string out = "alpha,r1,r2,r11p,r12p,r21p,r22p,private_fraction,scheme\n";
  for (const auto& p : points) {
    out += detail::fmt_g(p.alpha) + "," + detail::fmt_g(p.r_pair[0]) + "," +
           detail::fmt_g(p.r_pair[1]) + "," + detail::fmt_g(p.split.r_p[0][0]) +
           "," + detail::fmt_g(p.split.r_p[0][1]) + "," +
           detail::fmt_g(p.split.r_p[1][0]) + "," +
           detail::fmt_g(p.split.r_p[1][1]) + "," +
           detail::fmt_g(p.private_fraction) + "," + scheme_label + "\n";
  }
  return out;
}

inline std::string boundary_csv(const std::vector<BoundaryPoint>& points,
                                SchemeKind scheme) {
  return boundary_csv(points, to_string(scheme));
}

}  // namespace bhcoop
