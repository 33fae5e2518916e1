// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include <catch2/catch.hpp>

#include "bhcoop/conic.hpp"
#include "bhcoop/rng.hpp"

using namespace bhcoop;

namespace {

ChannelState single_user_channel(double gain) {
  ChannelState ch;
  ch.h[0][0] = CRowVector::Constant(1, Complex(gain, 0));
  ch.h[0][1] = CRowVector::Zero(1);
  ch.h[1][0] = CRowVector::Zero(1);
  ch.h[1][1] = CRowVector::Zero(1);
  return ch;
}

ChannelState random_channel(rng::Philox& gen, int nt, double sd = 0.7) {
  ChannelState ch;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CRowVector v(nt);
      for (int t = 0; t < nt; ++t) {
        const auto z = gen.gauss_pair();
        v(t) = Complex(z[0], z[1]) * sd;
      }
      ch.h[i][j] = v;
    }
  return ch;
}

// Feasible instance by construction: draw beamformers within the power
// budget, read off achievable rates with a margin, then ask the relaxation
// for those rates.
struct FeasibleInstance {
  SystemConfig cfg;
  ChannelState ch;
  RateSplit rates;
};

FeasibleInstance random_feasible(rng::Philox& gen, int nt) {
  FeasibleInstance fi;
  fi.cfg.n_t = nt;
  fi.cfg.noise_var = 0.5 + gen.uniform();
  fi.cfg.p = {1 + 9 * gen.uniform(), 1 + 9 * gen.uniform()};
  fi.cfg.c_bh = {50, 50};
  fi.ch = random_channel(gen, nt);

  BeamformerSet bf = BeamformerSet::zero(nt);
  for (int i = 0; i < 2; ++i) {
    for (int t = 0; t < 2 * nt; ++t) {
      const auto z = gen.gauss_pair();
      bf.w_c[i](t) = Complex(z[0], z[1]);
    }
    for (int j = 0; j < 2; ++j)
      for (int t = 0; t < nt; ++t) {
        const auto z = gen.gauss_pair();
        bf.w_p[i][j](t) = Complex(z[0], z[1]);
      }
  }
  const auto used = power_usage(bf);
  for (int j = 0; j < 2; ++j) {
    const double scale = std::sqrt(0.9 * fi.cfg.p[j] / std::max(used[j], 1e-12));
    if (scale < 1.0)
      for (int i = 0; i < 2; ++i) {
        bf.w_c[i].segment(j * nt, nt) *= scale;
        bf.w_p[i][j] *= scale;
      }
  }
  for (int i = 0; i < 2; ++i) {
    const double s2 = interference_plus_noise(fi.cfg, fi.ch, bf, i);
    double psum = 0.0, p[2];
    for (int j = 0; j < 2; ++j) {
      p[j] = std::norm((fi.ch.h[i][j] * bf.w_p[i][j]).value());
      psum += p[j];
    }
    const double bsum = log2_1p(psum / s2);
    for (int j = 0; j < 2; ++j)
      fi.rates.r_p[i][j] = 0.9 * std::min(log2_1p(p[j] / s2), bsum / 2);
    const double shared = std::norm((fi.ch.stacked(i) * bf.w_c[i]).value());
    fi.rates.r[i] = 0.9 * log2_1p((shared + psum) / s2);
  }
  return fi;
}

}  // namespace

TEST_CASE("relaxation construction", "[conic]") {
  SystemConfig cfg;
  cfg.n_t = 2;
  cfg.p = {10, 10};
  cfg.c_bh = {1, 1};
  rng::Philox gen(21);
  const ChannelState ch = random_channel(gen, 2);

  SECTION("zero rates produce all-zero targets") {
    const ConicProblem p = build_relaxation(cfg, ch, RateSplit::zero());
    for (int i = 0; i < 2; ++i) {
      REQUIRE(p.targets.gamma_tot[i] == 0.0);
      REQUIRE(p.targets.gamma_sum_p[i] == 0.0);
    }
    const SolveResult res = solve(p);
    REQUIRE(res.status == SolveStatus::optimal);
    REQUIRE(res.objective == Approx(0.0).margin(1e-7));
  }

  SECTION("unit private rate maps to a unit SINR target") {
    RateSplit rs;
    rs.r = {1.0, 0.0};
    rs.r_p = {{{1.0, 0.0}, {0.0, 0.0}}};
    const ConicProblem p = build_relaxation(cfg, ch, rs);
    REQUIRE(p.targets.gamma_p[0][0] == Approx(1.0));
    REQUIRE(p.targets.gamma_tot[0] == Approx(1.0));
  }

  SECTION("ten rows over six blocks") {
    const ConicProblem p = build_relaxation(cfg, ch, RateSplit::zero());
    REQUIRE(ConicProblem::kNumRows == 10);
    REQUIRE(ConicProblem::kNumBlocks == 6);
    const auto rows = relaxation_rows();
    int n_private = 0, n_sum = 0, n_tot = 0, n_power = 0;
    for (const auto& d : rows) {
      n_private += d.kind == RowKind::private_rate;
      n_sum += d.kind == RowKind::private_sum;
      n_tot += d.kind == RowKind::total_rate;
      n_power += d.kind == RowKind::power;
    }
    REQUIRE(n_private == 4);
    REQUIRE(n_sum == 2);
    REQUIRE(n_tot == 2);
    REQUIRE(n_power == 2);
    REQUIRE(p.d_sel[0] + p.d_sel[1] == CMatrix::Identity(4, 4));
  }

  SECTION("json dump carries the matrices as [re, im] pairs") {
    const ConicProblem p = build_relaxation(cfg, ch, RateSplit::zero());
    const nlohmann::json j = problem_to_json(p);
    REQUIRE(j["R_user"].size() == 2);
    REQUIRE(j["R_user"][0].size() == 4);
    REQUIRE(j["R_user"][0][0][0].size() == 2);

    const std::string path = "conic_dump_test.json";
    save_problem_json(p, path);
    std::ifstream in(path);
    nlohmann::json back;
    in >> back;
    REQUIRE(back["nt"] == 2);
    std::remove(path.c_str());
  }
}

TEST_CASE("single-user closed form", "[conic]") {
  SystemConfig cfg;
  cfg.n_t = 1;
  cfg.p = {100, 100};
  cfg.c_bh = {10, 10};
  cfg.noise_var = 1.0;

  SECTION("unit channel, one bit") {
    RateSplit rs;
    rs.r = {1, 0};
    rs.r_p = {{{1, 0}, {0, 0}}};
    const auto prob = build_relaxation(cfg, single_user_channel(1.0), rs);
    const SolveResult res = solve(prob);
    REQUIRE(res.status == SolveStatus::optimal);
    REQUIRE(res.objective == Approx(1.0).epsilon(1e-6));

    // strong duality on the oracle instance
    REQUIRE(res.dual);
    const DualEval ev = eval_dual(prob, *res.dual);
    REQUIRE(ev.ok);
    REQUIRE(ev.dual_obj == Approx(1.0).epsilon(1e-6));
    REQUIRE(ev.max_violation < 1e-7);

    // total-rate constraint tight at the optimum
    const KktReport kkt = kkt_structure_check(prob, res, *res.dual, 1e-5);
    REQUIRE(kkt.pass);
    bool saw_tight = false;
    for (const auto& c : kkt.conditions)
      if (c.name == "total_rate_tight_user1") {
        REQUIRE(c.applicable);
        saw_tight = true;
      }
    REQUIRE(saw_tight);
  }

  SECTION("gain-4 channel, two bits") {
    RateSplit rs;
    rs.r = {2, 0};
    rs.r_p = {{{2, 0}, {0, 0}}};
    const SolveResult res = solve(build_relaxation(cfg, single_user_channel(2.0), rs));
    REQUIRE(res.status == SolveStatus::optimal);
    REQUIRE(res.objective == Approx(0.75).epsilon(1e-6));
  }

  SECTION("matched filter over random channels and rates") {
    rng::Philox gen(5);
    for (int trial = 0; trial < 100; ++trial) {
      const int nt = 1 + trial % 2;
      SystemConfig c2 = cfg;
      c2.n_t = nt;
      c2.noise_var = 0.5 + gen.uniform();
      ChannelState ch;
      ch.h[0][0] = CRowVector(nt);
      for (int t = 0; t < nt; ++t) {
        const auto z = gen.gauss_pair();
        ch.h[0][0](t) = Complex(z[0], z[1]);
      }
      ch.h[0][1] = CRowVector::Zero(nt);
      ch.h[1][0] = CRowVector::Zero(nt);
      ch.h[1][1] = CRowVector::Zero(nt);
      const double r = 0.2 + 3.0 * gen.uniform();
      RateSplit rs;
      rs.r = {r, 0};
      rs.r_p = {{{r, 0}, {0, 0}}};
      const SolveResult res = solve(build_relaxation(c2, ch, rs));
      REQUIRE(res.status == SolveStatus::optimal);
      const double expect =
          (std::exp2(r) - 1.0) * c2.noise_var / ch.h[0][0].squaredNorm();
      REQUIRE(res.objective == Approx(expect).epsilon(1e-6));
    }
  }
}

TEST_CASE("duality on random feasible instances", "[conic]") {
  rng::Philox gen(17);
  int strong = 0;
  const int trials = 120;
  for (int trial = 0; trial < trials; ++trial) {
    const FeasibleInstance fi = random_feasible(gen, 1 + trial % 2);
    const ConicProblem prob = build_relaxation(fi.cfg, fi.ch, fi.rates);
    const SolveResult res = solve(prob);
    REQUIRE(res.status == SolveStatus::optimal);
    REQUIRE(res.dual);
    const DualEval ev = eval_dual(prob, *res.dual);
    // weak duality always
    REQUIRE(ev.dual_obj <= res.objective + 1e-6 * std::max(1.0, res.objective));
    // claimed zero gap at reported optima
    if (std::abs(ev.dual_obj - res.objective) <=
        1e-5 * std::max(1.0, res.objective))
      ++strong;
    REQUIRE(ev.max_violation < 1e-6);
  }
  REQUIRE(strong == trials);
}

TEST_CASE("rank-one recovery", "[conic]") {
  SECTION("exact rank-one input returns the vector up to phase") {
    rng::Philox gen(29);
    CVector w(3);
    for (int t = 0; t < 3; ++t) {
      const auto z = gen.gauss_pair();
      w(t) = Complex(z[0], z[1]);
    }
    const CMatrix v = w * w.adjoint();
    const auto ep = detail::top_eigpair(v);
    REQUIRE(ep.lam1 == Approx(w.squaredNorm()).epsilon(1e-12));
    const CVector got = std::sqrt(ep.lam1) * ep.u1;
    // equal up to a global phase: |<got, w>| = |got||w|
    REQUIRE(std::abs((got.adjoint() * w).value()) ==
            Approx(got.norm() * w.norm()).epsilon(1e-10));
    REQUIRE(ep.lam2 / ep.lam1 < 1e-12);
  }

  SECTION("near-diagonal matrix passes the rank test") {
    CMatrix v = CMatrix::Zero(2, 2);
    v(0, 0) = 1.0;
    v(1, 1) = 1e-12;
    const auto ep = detail::top_eigpair(v);
    REQUIRE(ep.lam1 == Approx(1.0));
    REQUIRE(ep.lam2 / ep.lam1 <= 1e-6);
    REQUIRE(std::abs(ep.u1(0)) == Approx(1.0));
  }

  SECTION("extraction revalidates the original constraints") {
    rng::Philox gen(31);
    int rank_pass = 0, valid = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
      const FeasibleInstance fi = random_feasible(gen, 2);
      const ConicProblem prob = build_relaxation(fi.cfg, fi.ch, fi.rates);
      SolveResult res = solve(prob);
      REQUIRE(res.status == SolveStatus::optimal);
      REQUIRE(res.bf);
      rank_pass += res.extraction.rank_ok;
      valid += res.extraction.air_ok && res.extraction.power_ok;
      // extracted vectors respect the air region at the requested rates
      REQUIRE(
          air_region_check(fi.cfg, fi.ch, *res.bf, fi.rates, 1e-6));
    }
    REQUIRE(valid == trials);
    REQUIRE(rank_pass >= 99);  // blurred ranks may fall back, rarely
  }
}

TEST_CASE("dual evaluation corner cases", "[conic]") {
  SystemConfig cfg;
  cfg.n_t = 1;
  cfg.p = {4, 4};
  cfg.c_bh = {10, 10};
  rng::Philox gen(37);
  const ChannelState ch = random_channel(gen, 1);
  RateSplit rs;
  rs.r = {0.5, 0.5};
  rs.r_p = {{{0.25, 0}, {0, 0.25}}};
  const ConicProblem prob = build_relaxation(cfg, ch, rs);

  SECTION("all-zero multipliers evaluate to the weak-duality floor") {
    const DualEval ev = eval_dual(prob, DualCertificate{});
    REQUIRE(ev.ok);
    REQUIRE(ev.dual_obj == 0.0);
    REQUIRE(ev.max_violation == 0.0);
  }

  SECTION("negative multipliers are rejected") {
    DualCertificate cert;
    cert.mu[0] = -0.5;
    REQUIRE_THROWS_AS(eval_dual(prob, cert), std::invalid_argument);
  }

  SECTION("positive multiplier on a vacuous constraint is flagged") {
    DualCertificate cert;
    cert.lambda_p[0][1] = 0.3;  // gamma is zero for that row
    const DualEval ev = eval_dual(prob, cert);
    REQUIRE_FALSE(ev.ok);
  }
}

TEST_CASE("kkt structure on random optima", "[conic]") {
  rng::Philox gen(41);
  int pass = 0;
  const int trials = 60;
  for (int trial = 0; trial < trials; ++trial) {
    const FeasibleInstance fi = random_feasible(gen, 1 + trial % 2);
    const ConicProblem prob = build_relaxation(fi.cfg, fi.ch, fi.rates);
    const SolveResult res = solve(prob);
    REQUIRE(res.status == SolveStatus::optimal);
    REQUIRE(res.dual);
    const KktReport rep = kkt_structure_check(prob, res, *res.dual, 1e-5);
    pass += rep.pass;
  }
  // numerical degeneracy tolerated on a small fraction
  REQUIRE(pass >= static_cast<int>(0.95 * trials));
}

TEST_CASE("zero-rate kkt check passes vacuously", "[conic]") {
  SystemConfig cfg;
  cfg.n_t = 1;
  cfg.p = {1, 1};
  cfg.c_bh = {1, 1};
  rng::Philox gen(43);
  const ChannelState ch = random_channel(gen, 1);
  const ConicProblem prob = build_relaxation(cfg, ch, RateSplit::zero());
  const SolveResult res = solve(prob);
  REQUIRE(res.status == SolveStatus::optimal);
  const KktReport rep = kkt_structure_check(prob, res, *res.dual, 1e-5);
  REQUIRE(rep.pass);
  for (const auto& c : rep.conditions)
    if (c.name.rfind("total_rate", 0) == 0) REQUIRE_FALSE(c.applicable);
}

TEST_CASE("infeasible and degenerate instances", "[conic]") {
  SystemConfig cfg;
  cfg.n_t = 1;
  cfg.p = {1, 1};
  cfg.c_bh = {10, 10};

  SECTION("positive rate on a dead channel is prescreened") {
    ChannelState ch = single_user_channel(1.0);
    RateSplit rs;
    rs.r = {0.5, 0.5};  // user 2 has no channel at all
    const SolveResult res = solve(build_relaxation(cfg, ch, rs));
    REQUIRE(res.status == SolveStatus::infeasible);
    REQUIRE(res.note == "positive rate target on a zero channel");
  }

  SECTION("power-limited rates are certified infeasible") {
    rng::Philox gen(47);
    const ChannelState ch = random_channel(gen, 1);
    RateSplit rs;
    rs.r = {14, 14};
    rs.r_p = {{{14, 0}, {0, 14}}};
    const SolveResult res = solve(build_relaxation(cfg, ch, rs));
    REQUIRE(res.status == SolveStatus::infeasible);
  }
}

TEST_CASE("feasibility is monotone in the rates", "[conic]") {
  rng::Philox gen(53);
  for (int trial = 0; trial < 30; ++trial) {
    const FeasibleInstance fi = random_feasible(gen, 2);
    RateSplit smaller = fi.rates;
    for (int i = 0; i < 2; ++i) {
      smaller.r[i] *= 0.7;
      for (int j = 0; j < 2; ++j)
        smaller.r_p[i][j] = std::min(smaller.r_p[i][j] * 0.7, smaller.r[i] / 2);
    }
    const SolveResult res = solve(build_relaxation(fi.cfg, fi.ch, smaller));
    REQUIRE(res.status == SolveStatus::optimal);
  }
}
