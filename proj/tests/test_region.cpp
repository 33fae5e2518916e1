// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include <catch2/catch.hpp>

#include "bhcoop/harness.hpp"
#include "bhcoop/region.hpp"
#include "bhcoop/rng.hpp"

using namespace bhcoop;

namespace {

SystemConfig fixture_cfg(double c, double snr_db = 10.0) {
  SystemConfig cfg;
  cfg.n_t = 2;
  cfg.noise_var = 1.0;
  const double p = std::pow(10.0, snr_db / 10.0);
  cfg.p = {p, p};
  cfg.c_bh = {c, c};
  return cfg;
}

// Independent 2D vertex enumeration over the six half-planes, written as a
// plain double loop over line pairs.
std::vector<std::array<double, 2>> oracle_vertices(double c1, double c2, double lo,
                                                   double hi) {
  struct Line {
    double a, b, c;  // a x + b y = c
  };
  const std::vector<Line> lines = {{1, 0, 0},  {1, 0, c1}, {0, 1, 0},
                                   {0, 1, c2}, {1, 1, lo}, {1, 1, hi}};
  auto inside = [&](double x, double y) {
    const double eps = 1e-9;
    return x >= -eps && x <= c1 + eps && y >= -eps && y <= c2 + eps &&
           x + y >= lo - eps && x + y <= hi + eps;
  };
  std::vector<std::array<double, 2>> out;
  for (size_t i = 0; i < lines.size(); ++i)
    for (size_t j = i + 1; j < lines.size(); ++j) {
      const double det = lines[i].a * lines[j].b - lines[j].a * lines[i].b;
      if (std::abs(det) < 1e-12) continue;
      const double x = (lines[i].c * lines[j].b - lines[j].c * lines[i].b) / det;
      const double y = (lines[i].a * lines[j].c - lines[j].a * lines[i].c) / det;
      if (!inside(x, y)) continue;
      bool dup = false;
      for (const auto& v : out)
        if (std::abs(v[0] - x) < 1e-9 && std::abs(v[1] - y) < 1e-9) dup = true;
      if (!dup) out.push_back({x, y});
    }
  return out;
}

bool same_vertex_set(std::vector<std::array<double, 2>> a,
                     std::vector<std::array<double, 2>> b) {
  if (a.size() != b.size()) return false;
  auto canon = [](std::vector<std::array<double, 2>>& v) {
    std::sort(v.begin(), v.end(), [](const auto& p, const auto& q) {
      if (std::abs(p[0] - q[0]) > 1e-9) return p[0] < q[0];
      return p[1] < q[1];
    });
  };
  canon(a);
  canon(b);
  for (size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i][0] - b[i][0]) > 1e-8 || std::abs(a[i][1] - b[i][1]) > 1e-8)
      return false;
  return true;
}

}  // namespace

TEST_CASE("private load", "[region]") {
  SystemConfig cfg;
  cfg.n_t = 1;

  cfg.c_bh = {1, 1};
  auto load = private_load(cfg, {1, 1});
  REQUIRE(load.c[0] == Approx(1.0));
  REQUIRE(load.c[1] == Approx(1.0));

  cfg.c_bh = {10, 10};
  load = private_load(cfg, {1, 1});
  REQUIRE(load.c[0] == 0.0);
  REQUIRE(load.c[1] == 0.0);

  cfg.c_bh = {1, 3};
  load = private_load(cfg, {1, 1.5});
  REQUIRE(load.c[0] == Approx(0.0));  // max(0, 2.5 - 3)
  REQUIRE(load.c[1] == Approx(1.5));  // max(0, 2.5 - 1)

  REQUIRE_THROWS_AS(private_load(cfg, {-1, 0}), std::invalid_argument);
}

TEST_CASE("corner points", "[region]") {
  SECTION("zero load collapses to the all-shared point") {
    const auto v = corner_points(PrivateLoad{{0, 0}}, {1, 1});
    REQUIRE(v.size() == 1);
    REQUIRE(v[0][0] == 0.0);
    REQUIRE(v[0][1] == 0.0);
  }

  SECTION("the six-vertex example") {
    const auto v = corner_points(PrivateLoad{{1, 1}}, {1.2, 1.2});
    const std::vector<std::array<double, 2>> expect = {
        {0, 0.8}, {0, 1}, {0.2, 1}, {1, 0.2}, {1, 0}, {0.8, 0}};
    REQUIRE(same_vertex_set(v, expect));
  }

  SECTION("incompatible band is empty") {
    const auto v = corner_points(PrivateLoad{{1, 1}}, {0.5, 0.5});
    REQUIRE(v.empty());
  }

  SECTION("matches an independent enumeration on random shapes") {
    rng::Philox gen(61);
    for (int trial = 0; trial < 300; ++trial) {
      const double c1 = 2.0 * gen.uniform();
      const double c2 = 2.0 * gen.uniform();
      const double r1 = 2.5 * gen.uniform();
      const double r2 = 2.5 * gen.uniform();
      const auto lib = corner_points(PrivateLoad{{c1, c2}}, {r1, r2});
      const auto ora = oracle_vertices(c1, c2, c1 + c2 - r2, r1);
      INFO("c1=" << c1 << " c2=" << c2 << " r1=" << r1 << " r2=" << r2);
      REQUIRE(same_vertex_set(lib, ora));
    }
  }

  SECTION("degenerate segment when one load is zero") {
    const auto v = corner_points(PrivateLoad{{0, 1}}, {2, 0.5});
    // x pinned to 0, y in [max(0, 1-0.5), min(1, 2)] = [0.5, 1]
    REQUIRE(v.size() == 2);
    for (const auto& p : v) REQUIRE(p[0] == 0.0);
  }
}

TEST_CASE("rate pair feasibility", "[region]") {
  SECTION("zero pair is feasible under every scheme") {
    SystemConfig cfg = fixture_cfg(1.0);
    const auto ch = sample_channel_fixture();
    for (auto s : {SchemeKind::FRS, SchemeKind::ARS, SchemeKind::IC, SchemeKind::NM}) {
      const auto res = check_rate_pair(cfg, ch, {0, 0}, s);
      REQUIRE(res.feasible);
      REQUIRE(res.split.sum_rate() == 0.0);
    }
  }

  SECTION("sum-backhaul bound rejects without solving") {
    SystemConfig cfg = fixture_cfg(1.0);
    const auto ch = sample_channel_fixture();
    for (auto s : {SchemeKind::FRS, SchemeKind::ARS, SchemeKind::IC, SchemeKind::NM}) {
      const auto res = check_rate_pair(cfg, ch, {1.2, 1.2}, s);
      REQUIRE_FALSE(res.feasible);
      REQUIRE(res.solver_failures == 0);
    }
  }

  SECTION("interference-channel closed form saturates the power") {
    SystemConfig cfg;
    cfg.n_t = 1;
    cfg.noise_var = 1.0;
    cfg.p = {1, 1};
    cfg.c_bh = {1, 1};
    ChannelState ch;
    ch.h[0][0] = CRowVector::Constant(1, Complex(1, 0));
    ch.h[0][1] = CRowVector::Zero(1);
    ch.h[1][0] = CRowVector::Zero(1);
    ch.h[1][1] = CRowVector::Zero(1);
    RegionOptions opt;
    const auto bp = bisect_sum_rate(cfg, ch, 1.0, SchemeKind::IC, opt);
    REQUIRE(bp.r_pair[0] == Approx(1.0).margin(2 * opt.tol_r));
    REQUIRE(bp.r_pair[1] == 0.0);
  }
}

TEST_CASE("bisection landmarks", "[region]") {
  SECTION("backhaul saturation on the fixture channel") {
    SystemConfig cfg = fixture_cfg(1.0);
    const auto bp = bisect_sum_rate(cfg, sample_channel_fixture(), 0.5, SchemeKind::FRS);
    REQUIRE(bp.r_pair[0] + bp.r_pair[1] == Approx(2.0).margin(1e-3));
    REQUIRE(backhaul_check(cfg, bp.split));
    REQUIRE(air_region_check(cfg, sample_channel_fixture(), bp.bf, bp.split, 1e-6));
  }

  SECTION("single-user profile reaches the matched-filter capacity") {
    SystemConfig cfg;
    cfg.n_t = 2;
    cfg.noise_var = 1.0;
    cfg.p = {9, 9};
    cfg.c_bh = {50, 50};
    ChannelState ch;
    ch.h[0][0] = CRowVector(2);
    ch.h[0][0] << Complex(1, 0), Complex(0, 0);
    ch.h[0][1] = CRowVector::Zero(2);
    ch.h[1][0] = CRowVector::Zero(2);
    ch.h[1][1] = CRowVector(2);
    ch.h[1][1] << Complex(1, 0), Complex(0, 0);
    RegionOptions opt;
    opt.tol_r = 1e-5;
    const auto bp = bisect_sum_rate(cfg, ch, 1.0, SchemeKind::FRS, opt);
    REQUIRE(bp.r_pair[0] == Approx(std::log2(10.0)).margin(3e-5));
  }

  SECTION("no backhaul means no rate") {
    SystemConfig cfg = fixture_cfg(1.0);
    cfg.c_bh = {0, 0};
    const auto bp = bisect_sum_rate(cfg, sample_channel_fixture(), 0.4, SchemeKind::FRS);
    REQUIRE(bp.r_pair[0] + bp.r_pair[1] == 0.0);
  }

  SECTION("deterministic output") {
    SystemConfig cfg = fixture_cfg(2.0);
    const auto a = bisect_sum_rate(cfg, sample_channel_fixture(), 0.37, SchemeKind::FRS);
    const auto b = bisect_sum_rate(cfg, sample_channel_fixture(), 0.37, SchemeKind::FRS);
    REQUIRE(a.r_pair[0] == b.r_pair[0]);
    REQUIRE(a.r_pair[1] == b.r_pair[1]);
    REQUIRE(a.split.r_p[0][0] == b.split.r_p[0][0]);
    REQUIRE(a.private_fraction == b.private_fraction);
  }
}

TEST_CASE("boundary sweeps and scheme structure", "[region]") {
  SystemConfig cfg = fixture_cfg(3.0);
  const auto ch = sample_channel_fixture();

  SECTION("scheme inclusions at a few profiles") {
    for (double alpha : {0.25, 0.5, 0.75}) {
      const double frs =
          bisect_sum_rate(cfg, ch, alpha, SchemeKind::FRS).r_pair[0] /
          (alpha > 0 ? alpha : 1);
      for (auto s : {SchemeKind::ARS, SchemeKind::IC, SchemeKind::NM}) {
        const double other =
            bisect_sum_rate(cfg, ch, alpha, s).r_pair[0] / (alpha > 0 ? alpha : 1);
        REQUIRE(frs >= other - 2e-4);
      }
    }
  }

  SECTION("binding backhaul when the load is positive") {
    SystemConfig tight = fixture_cfg(1.0);
    const auto bp = bisect_sum_rate(tight, ch, 0.5, SchemeKind::FRS);
    const double r = bp.r_pair[0] + bp.r_pair[1];
    REQUIRE(r > 1.0);  // load is active
    // link 1 carries sum - privates(other BS): must equal C within tolerance
    const double used =
        r - bp.split.r_p[0][1] - bp.split.r_p[1][1];
    REQUIRE(used == Approx(tight.c_bh[0]).margin(1e-6));
    REQUIRE(bp.private_fraction > 0.0);
  }

  SECTION("region monotone in backhaul capacity") {
    const double r1 =
        bisect_sum_rate(fixture_cfg(1.0), ch, 0.5, SchemeKind::FRS).split.sum_rate();
    const double r2 =
        bisect_sum_rate(fixture_cfg(2.0), ch, 0.5, SchemeKind::FRS).split.sum_rate();
    const double r3 =
        bisect_sum_rate(fixture_cfg(4.0), ch, 0.5, SchemeKind::FRS).split.sum_rate();
    REQUIRE(r2 >= r1 - 2e-4);
    REQUIRE(r3 >= r2 - 2e-4);
  }

  SECTION("alpha grid endpoints are the single-user points") {
    const auto pts = region_boundary(cfg, ch, SchemeKind::FRS, {0.0, 1.0});
    REQUIRE(pts.size() == 2);
    REQUIRE(pts[0].r_pair[0] == 0.0);
    REQUIRE(pts[1].r_pair[1] == 0.0);
    REQUIRE(pts[0].r_pair[1] > 0.5);
    REQUIRE(pts[1].r_pair[0] > 0.5);
  }

  SECTION("csv layout is stable") {
    const auto pts = region_boundary(cfg, ch, SchemeKind::NM, {0.0, 0.5, 1.0});
    const std::string csv = boundary_csv(pts, SchemeKind::NM);
    REQUIRE(csv.rfind("alpha,r1,r2,r11p,r12p,r21p,r22p,private_fraction,scheme\n",
                      0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4);
    REQUIRE(csv.find(",NM\n") != std::string::npos);
  }

  SECTION("unconstrained backhaul collapses the schemes together") {
    SystemConfig big = fixture_cfg(100.0);
    for (double alpha : {0.3, 0.7}) {
      const auto frs = bisect_sum_rate(big, ch, alpha, SchemeKind::FRS);
      const auto nm = bisect_sum_rate(big, ch, alpha, SchemeKind::NM);
      REQUIRE(frs.split.sum_rate() == Approx(nm.split.sum_rate()).margin(1e-3));
      REQUIRE(frs.private_fraction == 0.0);
    }
  }
}

TEST_CASE("interior grid probing", "[region]") {
  SystemConfig cfg = fixture_cfg(1.0);
  const auto ch = sample_channel_fixture();
  RegionOptions opt;
  opt.grid_k = 6;

  // just beyond the boundary: corners infeasible, and the interior probe
  // should not find anything either (the conjectured behavior)
  const auto base = bisect_sum_rate(cfg, ch, 0.5, SchemeKind::FRS);
  const double r = base.split.sum_rate() + 0.05;
  const auto res = check_rate_pair(cfg, ch, {r / 2, r / 2}, SchemeKind::FRS, opt);
  REQUIRE_FALSE(res.feasible);
  REQUIRE_FALSE(res.interior_counterexample);
}
