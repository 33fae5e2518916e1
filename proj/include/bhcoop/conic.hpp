// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhcoop/ipm.hpp"
#include "bhcoop/model.hpp"
#include "bhcoop/rng.hpp"

// Fixed-rate power minimization for the two-cell rate-splitting scheme as a
// semidefinite relaxation: each beamformer w is replaced by a PSD matrix V
// standing in for w w^H, every SINR requirement becomes a linear trace row,
// and per-BS power caps close the problem.  The relaxation is tight (rank
// one at the optimum) for this family, so beamformers are recovered from
// the top eigenpair, with a randomization fallback for numerically blurred
// ranks.

namespace bhcoop {

// SINR thresholds Gamma = 2^rate - 1 for each rate constraint family.
struct SinrTargets {
  std::array<std::array<double, 2>, 2> gamma_p{{{0, 0}, {0, 0}}};
  std::array<double, 2> gamma_sum_p{0, 0};
  std::array<double, 2> gamma_tot{0, 0};

  static SinrTargets from_rates(const RateSplit& rs) {
    auto gamma = [](double rate) { return std::exp2(std::max(0.0, rate)) - 1.0; };
    SinrTargets t;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) t.gamma_p[i][j] = gamma(rs.r_p[i][j]);
      t.gamma_sum_p[i] = gamma(rs.r_p[i][0] + rs.r_p[i][1]);
      t.gamma_tot[i] = gamma(rs.r[i]);
    }
    return t;
  }
};

enum class RowKind { private_rate, private_sum, total_rate, power };

struct RowDesc {
  RowKind kind;
  int user = -1;  // for SINR rows
  int bs = -1;    // for private_rate and power rows
};

// The ten constraint rows, in fixed order: four per-link private SINR rows,
// two private-sum rows, two total-rate rows, two per-BS power rows.
inline std::array<RowDesc, 10> relaxation_rows() {
  return {{{RowKind::private_rate, 0, 0},
           {RowKind::private_rate, 0, 1},
           {RowKind::private_rate, 1, 0},
           {RowKind::private_rate, 1, 1},
           {RowKind::private_sum, 0, -1},
           {RowKind::private_sum, 1, -1},
           {RowKind::total_rate, 0, -1},
           {RowKind::total_rate, 1, -1},
           {RowKind::power, -1, 0},
           {RowKind::power, -1, 1}}};
}

// Matrix data of the relaxation.  Block order everywhere:
//   [V_1c, V_2c, V_11p, V_12p, V_21p, V_22p].
struct ConicProblem {
  SystemConfig cfg;
  ChannelState ch;
  RateSplit rates;
  SinrTargets targets;
  std::array<CMatrix, 2> r_user;                 // h_i^H h_i, 2n_t x 2n_t
  std::array<std::array<CMatrix, 2>, 2> r_link;  // h_ij^H h_ij, n_t x n_t
  std::array<CMatrix, 2> d_sel;                  // BS antenna-block selectors

  static constexpr int kNumRows = 10;
  static constexpr int kNumBlocks = 6;

  int block_dim(int b) const { return b < 2 ? 2 * cfg.n_t : cfg.n_t; }
  static int block_of_shared(int i) { return i; }
  static int block_of_private(int i, int j) { return 2 + 2 * i + j; }
};

inline ConicProblem build_relaxation(const SystemConfig& cfg, const ChannelState& ch,
                                     const RateSplit& rates) {
  cfg.validate();
  ch.validate(cfg.n_t);
  rates.validate();
  ConicProblem prob;
  prob.cfg = cfg;
  prob.ch = ch;
  prob.rates = rates;
  prob.targets = SinrTargets::from_rates(rates);
  for (int i = 0; i < 2; ++i) {
    const CRowVector hi = ch.stacked(i);
    prob.r_user[i] = hi.adjoint() * hi;
    for (int j = 0; j < 2; ++j)
      prob.r_link[i][j] = ch.h[i][j].adjoint() * ch.h[i][j];
  }
  for (int j = 0; j < 2; ++j) {
    CMatrix d = CMatrix::Zero(2 * cfg.n_t, 2 * cfg.n_t);
    d.block(j * cfg.n_t, j * cfg.n_t, cfg.n_t, cfg.n_t) =
        CMatrix::Identity(cfg.n_t, cfg.n_t);
    prob.d_sel[j] = d;
  }
  return prob;
}

namespace detail {

// Gamma and the complex coefficient per block for one row; SINR rows are in
// "useful - Gamma * interference >= Gamma * sigma^2" orientation.
struct ComplexRow {
  std::array<CMatrix, ConicProblem::kNumBlocks> coef;
  double rhs = 0.0;
  double slack_sign = -1.0;  // -1: >= row (surplus), +1: <= row (slack)
};

inline ComplexRow complex_row(const ConicProblem& p, int m) {
  const auto desc = relaxation_rows()[m];
  ComplexRow row;
  for (int b = 0; b < ConicProblem::kNumBlocks; ++b)
    row.coef[b] = CMatrix::Zero(p.block_dim(b), p.block_dim(b));

  if (desc.kind == RowKind::power) {
    const int j = desc.bs;
    for (int i = 0; i < 2; ++i) {
      row.coef[ConicProblem::block_of_shared(i)] += p.d_sel[j];
      row.coef[ConicProblem::block_of_private(i, j)] +=
          CMatrix::Identity(p.cfg.n_t, p.cfg.n_t);
    }
    row.rhs = p.cfg.p[j];
    row.slack_sign = +1.0;
    return row;
  }

  const int i = desc.user;
  const int oi = other(i);
  double gamma = 0.0;
  switch (desc.kind) {
    case RowKind::private_rate:
      gamma = p.targets.gamma_p[i][desc.bs];
      row.coef[ConicProblem::block_of_private(i, desc.bs)] += p.r_link[i][desc.bs];
      break;
    case RowKind::private_sum:
      gamma = p.targets.gamma_sum_p[i];
      for (int j = 0; j < 2; ++j)
        row.coef[ConicProblem::block_of_private(i, j)] += p.r_link[i][j];
      break;
    case RowKind::total_rate:
      gamma = p.targets.gamma_tot[i];
      row.coef[ConicProblem::block_of_shared(i)] += p.r_user[i];
      for (int j = 0; j < 2; ++j)
        row.coef[ConicProblem::block_of_private(i, j)] += p.r_link[i][j];
      break;
    default:
      break;
  }
  // Interference entering user i's noise: the other user's beams.
  for (int j = 0; j < 2; ++j)
    row.coef[ConicProblem::block_of_private(oi, j)] -= gamma * p.r_link[i][j];
  row.coef[ConicProblem::block_of_shared(oi)] -= gamma * p.r_user[i];
  row.rhs = gamma * p.cfg.noise_var;
  row.slack_sign = -1.0;
  return row;
}

inline double row_gamma(const ConicProblem& p, int m) {
  const auto desc = relaxation_rows()[m];
  switch (desc.kind) {
    case RowKind::private_rate: return p.targets.gamma_p[desc.user][desc.bs];
    case RowKind::private_sum: return p.targets.gamma_sum_p[desc.user];
    case RowKind::total_rate: return p.targets.gamma_tot[desc.user];
    default: return -1.0;
  }
}

// Hermitian -> real symmetric embedding [Re -Im; Im Re].  Trace doubling is
// compensated by the 1/2 on every embedded coefficient.
inline ipm::Mat embed(const CMatrix& k) {
  const int n = static_cast<int>(k.rows());
  ipm::Mat e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = k.real();
  e.bottomRightCorner(n, n) = k.real();
  e.topRightCorner(n, n) = -k.imag();
  e.bottomLeftCorner(n, n) = k.imag();
  return e;
}

inline CMatrix unembed(const ipm::Mat& x) {
  const int n = static_cast<int>(x.rows()) / 2;
  CMatrix v(n, n);
  v.real() = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  v.imag() = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  v = 0.5 * (v + v.adjoint()).eval();
  return v;
}

}  // namespace detail

enum class SolveStatus { optimal, infeasible, numerical_failure };

// Multipliers in the substituted form used by the dual: lambda = y * Gamma
// row-wise, mu for the power rows.
struct DualCertificate {
  std::array<std::array<double, 2>, 2> lambda_p{{{0, 0}, {0, 0}}};
  std::array<double, 2> lambda_sum_p{0, 0};
  std::array<double, 2> lambda_tot{0, 0};
  std::array<double, 2> mu{0, 0};
  double dual_obj = 0.0;
};

struct ExtractionReport {
  bool attempted = false;
  bool rank_ok = true;
  double worst_eig_ratio = 0.0;
  bool fallback_used = false;
  bool air_ok = false;
  bool power_ok = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  std::array<CMatrix, 2> v_c;
  std::array<std::array<CMatrix, 2>, 2> v_p;
  double objective = 0.0;
  std::optional<BeamformerSet> bf;
  std::optional<DualCertificate> dual;
  ExtractionReport extraction;
  int iterations = 0;
  double rel_gap = 0.0;
  bool inexact = false;  // solver met only its relaxed thresholds
  std::string note;
};

struct SolverOptions {
  ipm::IpmOptions ipm;
  double tol_rank = 1e-6;         // second-to-first eigenvalue ratio
  bool extract = true;
  int randomization_samples = 50;
  std::uint64_t randomization_seed = 0x5eed;
  double revalidate_tol = 1e-6;
};

namespace detail {

struct Lowered {
  ipm::BlockProblem prob;
  std::array<int, ConicProblem::kNumRows> row_index;  // -1 when dropped
  int n_active = 0;
};

inline Lowered lower(const ConicProblem& p) {
  Lowered lo;
  lo.row_index.fill(-1);
  for (int b = 0; b < ConicProblem::kNumBlocks; ++b)
    lo.prob.dims.sdp.push_back(2 * p.block_dim(b));

  std::vector<int> active;
  for (int m = 0; m < ConicProblem::kNumRows; ++m) {
    const double g = row_gamma(p, m);
    if (g >= 0.0 && g <= 1e-12) continue;  // vacuous SINR row
    lo.row_index[m] = static_cast<int>(active.size());
    active.push_back(m);
  }
  lo.n_active = static_cast<int>(active.size());
  lo.prob.dims.lin = lo.n_active;

  for (int b = 0; b < ConicProblem::kNumBlocks; ++b)
    lo.prob.c_sdp.push_back(0.5 *
                            ipm::Mat::Identity(2 * p.block_dim(b), 2 * p.block_dim(b)));
  lo.prob.c_lin = ipm::Vec::Zero(lo.n_active);

  for (int idx = 0; idx < lo.n_active; ++idx) {
    const int m = active[idx];
    const ComplexRow crow = complex_row(p, m);
    ipm::BlockRow brow;
    for (int b = 0; b < ConicProblem::kNumBlocks; ++b)
      brow.a_sdp.push_back(0.5 * embed(crow.coef[b]));
    brow.a_lin = ipm::Vec::Zero(lo.n_active);
    brow.a_lin(idx) = crow.slack_sign;
    brow.rhs = crow.rhs;
    lo.prob.rows.push_back(std::move(brow));
  }
  return lo;
}

inline double real_inner(const CMatrix& a, const CMatrix& b) {
  return (a.cwiseProduct(b.conjugate())).sum().real();
}

// lambda / Gamma with the convention that a vacuous constraint (Gamma = 0)
// contributes nothing as long as its multiplier is also zero.
inline double dual_ratio(double lambda, double gamma, bool& ok) {
  if (gamma > 1e-12) return lambda / gamma;
  if (lambda <= 1e-9) return 0.0;
  ok = false;
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Evaluation of the dual objective and the two matrix-inverse dual
// constraint families; returns the worst constraint violation.
struct DualEval {
  double dual_obj = 0.0;
  double max_violation = 0.0;
  bool ok = true;
  std::string note;
};

inline DualEval eval_dual(const ConicProblem& p, const DualCertificate& cert) {
  for (int i = 0; i < 2; ++i) {
    if (cert.lambda_tot[i] < -1e-9 || cert.lambda_sum_p[i] < -1e-9 ||
        cert.mu[i] < -1e-9 || cert.lambda_p[i][0] < -1e-9 || cert.lambda_p[i][1] < -1e-9)
      throw std::invalid_argument("eval_dual: multipliers must be nonnegative");
  }
  DualEval ev;
  const int nt = p.cfg.n_t;

  std::array<double, 2> s{};
  double lam_sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    const int oi = other(i);
    s[i] = cert.lambda_p[oi][0] + cert.lambda_p[oi][1] + cert.lambda_sum_p[oi] +
           cert.lambda_tot[oi];
    lam_sum += cert.lambda_p[i][0] + cert.lambda_p[i][1] + cert.lambda_sum_p[i] +
               cert.lambda_tot[i];
  }
  ev.dual_obj = p.cfg.noise_var * lam_sum - cert.mu[0] * p.cfg.p[0] -
                cert.mu[1] * p.cfg.p[1];

  for (int i = 0; i < 2; ++i) {
    const int oi = other(i);
    bool ratio_ok = true;
    const double rhs_tot = detail::dual_ratio(cert.lambda_tot[i],
                                              p.targets.gamma_tot[i], ratio_ok);

    // Shared-beam family: the scaled channel gain through the regularized
    // inverse bounds lambda_i / Gamma_i.
    if (p.targets.gamma_tot[i] > 1e-12 || cert.lambda_tot[i] > 1e-9) {
      CMatrix m = CMatrix::Identity(2 * nt, 2 * nt);
      m += cert.mu[0] * p.d_sel[0] + cert.mu[1] * p.d_sel[1];
      m += s[i] * p.r_user[oi];
      const CRowVector hi = p.ch.stacked(i);
      Eigen::LLT<CMatrix> fac(m);
      if (fac.info() != Eigen::Success) {
        ev.ok = false;
        ev.note = "dual evaluation: factorization failed";
        continue;
      }
      // A vanishing channel makes the matrix constraint trivial (its
      // right-hand sides carry R = h^H h = 0), so only positive gains bind.
      const double denom = (hi * fac.solve(hi.adjoint())).value().real();
      if (denom > 1e-300)
        ev.max_violation = std::max(ev.max_violation, rhs_tot - 1.0 / denom);
    }

    for (int j = 0; j < 2; ++j) {
      bool any = p.targets.gamma_p[i][j] > 1e-12 ||
                 p.targets.gamma_sum_p[i] > 1e-12 ||
                 p.targets.gamma_tot[i] > 1e-12;
      if (!any) continue;
      double rhs = detail::dual_ratio(cert.lambda_p[i][j], p.targets.gamma_p[i][j],
                                      ratio_ok) +
                   detail::dual_ratio(cert.lambda_sum_p[i],
                                      p.targets.gamma_sum_p[i], ratio_ok) +
                   rhs_tot;
      CMatrix m = (1.0 + cert.mu[j]) * CMatrix::Identity(nt, nt);
      m += s[i] * p.r_link[oi][j];
      Eigen::LLT<CMatrix> fac(m);
      if (fac.info() != Eigen::Success) {
        ev.ok = false;
        ev.note = "dual evaluation: factorization failed";
        continue;
      }
      const double denom = (p.ch.h[i][j] * fac.solve(p.ch.h[i][j].adjoint()))
                               .value()
                               .real();
      if (denom > 1e-300)
        ev.max_violation = std::max(ev.max_violation, rhs - 1.0 / denom);
    }
    if (!ratio_ok) {
      ev.ok = false;
      ev.note = "dual evaluation: positive multiplier on vacuous constraint";
      ev.max_violation = std::numeric_limits<double>::infinity();
    }
  }
  return ev;
}

namespace detail {

// Deterministic global phase: rotate so the largest-magnitude entry is real
// and nonnegative.
inline CVector fix_phase(const CVector& w) {
  int idx = 0;
  double best = 0.0;
  for (int k = 0; k < w.size(); ++k)
    if (std::abs(w(k)) > best) {
      best = std::abs(w(k));
      idx = k;
    }
  if (best == 0.0) return w;
  const Complex phase = std::conj(w(idx)) / std::abs(w(idx));
  return phase * w;
}

struct EigPair {
  double lam1 = 0.0, lam2 = 0.0;
  CVector u1;
};

inline EigPair top_eigpair(const CMatrix& v) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(v);
  EigPair out;
  const int n = static_cast<int>(v.rows());
  out.lam1 = es.eigenvalues()(n - 1);
  out.lam2 = n > 1 ? std::abs(es.eigenvalues()(n - 2)) : 0.0;
  out.u1 = es.eigenvectors().col(n - 1);
  return out;
}

}  // namespace detail

inline BeamformerSet extract_rank_one(const ConicProblem& prob, SolveResult& res,
                                      double tol_rank = 1e-6,
                                      const SolverOptions& opt = {});

inline SolveResult solve(const ConicProblem& prob, const SolverOptions& opt = {}) {
  SolveResult res;
  const int nt = prob.cfg.n_t;
  for (int i = 0; i < 2; ++i) {
    res.v_c[i] = CMatrix::Zero(2 * nt, 2 * nt);
    for (int j = 0; j < 2; ++j) res.v_p[i][j] = CMatrix::Zero(nt, nt);
  }

  // Positive SINR targets on a dead channel can never be met; the relaxation
  // would lack a strictly feasible point, so declare these up front.
  const auto rows = relaxation_rows();
  for (int m = 0; m < ConicProblem::kNumRows; ++m) {
    const double g = detail::row_gamma(prob, m);
    if (g <= 1e-12) continue;
    double useful = 0.0;
    const auto& d = rows[m];
    switch (d.kind) {
      case RowKind::private_rate:
        useful = prob.ch.h[d.user][d.bs].squaredNorm();
        break;
      case RowKind::private_sum:
        useful = prob.ch.h[d.user][0].squaredNorm() + prob.ch.h[d.user][1].squaredNorm();
        break;
      case RowKind::total_rate:
        useful = prob.ch.stacked(d.user).squaredNorm();
        break;
      default:
        break;
    }
    if (useful <= 1e-30) {
      res.status = SolveStatus::infeasible;
      res.note = "positive rate target on a zero channel";
      return res;
    }
  }

  const detail::Lowered lo = detail::lower(prob);
  const ipm::IpmResult ir = ipm::solve_block_problem(lo.prob, opt.ipm);
  res.iterations = ir.iterations;
  res.rel_gap = ir.rel_gap;
  res.inexact = ir.inexact;

  switch (ir.status) {
    case ipm::IpmStatus::optimal:
      res.status = SolveStatus::optimal;
      break;
    case ipm::IpmStatus::primal_infeasible:
      res.status = SolveStatus::infeasible;
      res.note = "dual improving ray found";
      return res;
    case ipm::IpmStatus::dual_infeasible:
      res.status = SolveStatus::numerical_failure;
      res.note = "unbounded relaxation reported (unexpected for this family)";
      return res;
    default:
      res.status = SolveStatus::numerical_failure;
      res.note = "interior point did not converge";
      return res;
  }

  res.objective = ir.objective;
  for (int i = 0; i < 2; ++i) {
    res.v_c[i] = detail::unembed(ir.x_sdp[ConicProblem::block_of_shared(i)]);
    for (int j = 0; j < 2; ++j)
      res.v_p[i][j] = detail::unembed(ir.x_sdp[ConicProblem::block_of_private(i, j)]);
  }

  DualCertificate cert;
  double lam_sum = 0.0;
  for (int m = 0; m < ConicProblem::kNumRows; ++m) {
    const int li = lo.row_index[m];
    const double y = li >= 0 ? ir.y(li) : 0.0;
    const auto& d = rows[m];
    if (d.kind == RowKind::power) {
      cert.mu[d.bs] = std::max(0.0, -y);
      continue;
    }
    const double g = detail::row_gamma(prob, m);
    const double lam = std::max(0.0, y) * g;
    switch (d.kind) {
      case RowKind::private_rate: cert.lambda_p[d.user][d.bs] = lam; break;
      case RowKind::private_sum: cert.lambda_sum_p[d.user] = lam; break;
      case RowKind::total_rate: cert.lambda_tot[d.user] = lam; break;
      default: break;
    }
    lam_sum += lam;
  }
  cert.dual_obj = prob.cfg.noise_var * lam_sum - cert.mu[0] * prob.cfg.p[0] -
                  cert.mu[1] * prob.cfg.p[1];
  res.dual = cert;

  if (opt.extract) extract_rank_one(prob, res, opt.tol_rank, opt);
  return res;
}

inline BeamformerSet extract_rank_one(const ConicProblem& prob, SolveResult& res,
                                      double tol_rank, const SolverOptions& opt) {
  const int nt = prob.cfg.n_t;
  BeamformerSet bf = BeamformerSet::zero(nt);
  res.extraction = ExtractionReport{};
  res.extraction.attempted = true;

  const double lam_floor = 1e-9 * std::max(1.0, res.objective);
  auto pull = [&](const CMatrix& v, CVector& w) {
    const auto ep = detail::top_eigpair(v);
    if (ep.lam1 <= lam_floor) {
      w = CVector::Zero(v.rows());
      return;
    }
    const double ratio = ep.lam2 / ep.lam1;
    res.extraction.worst_eig_ratio = std::max(res.extraction.worst_eig_ratio, ratio);
    if (ratio > tol_rank) res.extraction.rank_ok = false;
    w = std::sqrt(ep.lam1) * detail::fix_phase(ep.u1);
  };
  for (int i = 0; i < 2; ++i) {
    pull(res.v_c[i], bf.w_c[i]);
    for (int j = 0; j < 2; ++j) pull(res.v_p[i][j], bf.w_p[i][j]);
  }

  auto validate = [&](const BeamformerSet& cand) {
    const auto used = power_usage(cand);
    const bool power_ok = used[0] <= prob.cfg.p[0] + kPowerTol &&
                          used[1] <= prob.cfg.p[1] + kPowerTol;
    const bool air_ok =
        air_region_check(prob.cfg, prob.ch, cand, prob.rates, opt.revalidate_tol);
    return std::pair<bool, bool>(power_ok, air_ok);
  };

  auto [power_ok, air_ok] = validate(bf);
  res.extraction.power_ok = power_ok;
  res.extraction.air_ok = air_ok;

  if (!res.extraction.rank_ok || !air_ok || !power_ok) {
    // Randomization recovery: keep directions, re-optimize the powers as an
    // LP over the same rows, sampling Gaussian directions shaped by V for
    // the blurred blocks.
    res.extraction.fallback_used = true;
    const detail::Lowered lo = detail::lower(prob);
    rng::Philox gen(opt.randomization_seed);
    BeamformerSet best = bf;
    double best_obj = std::numeric_limits<double>::infinity();
    bool have = false;

    auto direction_power_lp = [&](const std::array<CVector, 6>& dirs,
                                  BeamformerSet& out) {
      ipm::BlockProblem lp;
      lp.dims.lin = 6 + lo.n_active;
      lp.c_lin = ipm::Vec::Zero(lp.dims.lin);
      for (int b = 0; b < 6; ++b) lp.c_lin(b) = dirs[b].squaredNorm();
      for (size_t r = 0; r < lo.prob.rows.size(); ++r) {
        ipm::BlockRow row;
        row.a_lin = ipm::Vec::Zero(lp.dims.lin);
        // <K, p * dd^H> = p * d^H K d, with K recovered per original row.
        int m = 0;
        for (int mm = 0; mm < ConicProblem::kNumRows; ++mm)
          if (lo.row_index[mm] == static_cast<int>(r)) m = mm;
        const detail::ComplexRow crow = detail::complex_row(prob, m);
        for (int b = 0; b < 6; ++b)
          row.a_lin(b) =
              (dirs[b].adjoint() * crow.coef[b] * dirs[b]).value().real();
        row.a_lin(6 + static_cast<int>(r)) = crow.slack_sign;
        row.rhs = crow.rhs;
        lp.rows.push_back(std::move(row));
      }
      ipm::IpmOptions lp_opt = opt.ipm;
      const ipm::IpmResult lr = ipm::solve_block_problem(lp, lp_opt);
      if (lr.status != ipm::IpmStatus::optimal) return false;
      double obj = lr.objective;
      if (obj >= best_obj && have) return false;
      for (int i = 0; i < 2; ++i) {
        out.w_c[i] = std::sqrt(std::max(0.0, lr.x_lin(ConicProblem::block_of_shared(i)))) *
                     dirs[ConicProblem::block_of_shared(i)];
        for (int j = 0; j < 2; ++j)
          out.w_p[i][j] =
              std::sqrt(std::max(0.0, lr.x_lin(ConicProblem::block_of_private(i, j)))) *
              dirs[ConicProblem::block_of_private(i, j)];
      }
      best_obj = obj;
      return true;
    };

    auto shaped_dir = [&](const CMatrix& v) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(v);
      CVector g(v.rows());
      for (int k = 0; k < g.size(); ++k) {
        const auto zz = gen.gauss_pair();
        g(k) = Complex(zz[0], zz[1]) / std::sqrt(2.0);
      }
      CVector w = es.eigenvectors() *
                  es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * g;
      const double n = w.norm();
      return n > 0 ? CVector(w / n) : w;
    };

    for (int trial = 0; trial < opt.randomization_samples; ++trial) {
      std::array<CVector, 6> dirs;
      auto dir_of = [&](const CMatrix& v, const CVector& eig_w) {
        if (trial == 0 && eig_w.norm() > 0) return CVector(eig_w.normalized());
        if (v.norm() <= lam_floor) return CVector(CVector::Zero(v.rows()));
        return shaped_dir(v);
      };
      for (int i = 0; i < 2; ++i) {
        dirs[ConicProblem::block_of_shared(i)] = dir_of(res.v_c[i], bf.w_c[i]);
        for (int j = 0; j < 2; ++j)
          dirs[ConicProblem::block_of_private(i, j)] =
              dir_of(res.v_p[i][j], bf.w_p[i][j]);
      }
      BeamformerSet cand = BeamformerSet::zero(nt);
      if (!direction_power_lp(dirs, cand)) continue;
      auto [p_ok, a_ok] = validate(cand);
      if (p_ok && a_ok) {
        best = cand;
        have = true;
      }
    }
    if (have) {
      bf = best;
      auto [p_ok, a_ok] = validate(bf);
      res.extraction.power_ok = p_ok;
      res.extraction.air_ok = a_ok;
    }
  }

  res.bf = bf;
  return bf;
}

// Tightness / complementary-slackness structure at a reported optimum.
struct KktCondition {
  std::string name;
  bool applicable = false;
  bool pass = true;
  double residual = 0.0;
};

struct KktReport {
  std::vector<KktCondition> conditions;
  bool pass = true;
};

inline KktReport kkt_structure_check(const ConicProblem& p, const SolveResult& res,
                                     const DualCertificate& cert, double tol = 1e-5) {
  KktReport rep;
  auto push = [&](KktCondition c) {
    if (c.applicable && !c.pass) rep.pass = false;
    rep.conditions.push_back(std::move(c));
  };
  const double sigma2 = p.cfg.noise_var;

  std::array<double, 2> interf{};
  for (int i = 0; i < 2; ++i) {
    const int oi = other(i);
    double acc = 0.0;
    for (int j = 0; j < 2; ++j) acc += detail::real_inner(p.r_link[i][j], res.v_p[oi][j]);
    acc += detail::real_inner(p.r_user[i], res.v_c[oi]);
    interf[i] = acc;
  }

  for (int i = 0; i < 2; ++i) {
    KktCondition tot{"total_rate_tight_user" + std::to_string(i + 1)};
    if (p.targets.gamma_tot[i] > 1e-12) {
      tot.applicable = true;
      double useful = detail::real_inner(p.r_user[i], res.v_c[i]);
      for (int j = 0; j < 2; ++j)
        useful += detail::real_inner(p.r_link[i][j], res.v_p[i][j]);
      const double need = p.targets.gamma_tot[i] * (sigma2 + interf[i]);
      tot.residual = std::abs(useful - need) / std::max(1.0, need);
      tot.pass = tot.residual <= tol;
    }
    push(tot);

    KktCondition ps{"private_sum_tight_user" + std::to_string(i + 1)};
    if (p.targets.gamma_sum_p[i] > 1e-12) {
      ps.applicable = true;
      double useful = 0.0;
      for (int j = 0; j < 2; ++j)
        useful += detail::real_inner(p.r_link[i][j], res.v_p[i][j]);
      const double need = p.targets.gamma_sum_p[i] * (sigma2 + interf[i]);
      ps.residual = std::abs(useful - need) / std::max(1.0, need);
      ps.pass = ps.residual <= tol;
    }
    push(ps);
  }

  // Per user, the smaller of the two private dual gaps carries a zero
  // multiplier.
  for (int i = 0; i < 2; ++i) {
    KktCondition jm{"private_min_multiplier_zero_user" + std::to_string(i + 1)};
    if (p.targets.gamma_p[i][0] > 1e-12 && p.targets.gamma_p[i][1] > 1e-12) {
      jm.applicable = true;
      const int oi = other(i);
      const double s_i = cert.lambda_p[oi][0] + cert.lambda_p[oi][1] +
                         cert.lambda_sum_p[oi] + cert.lambda_tot[oi];
      const int nt = p.cfg.n_t;
      CMatrix mc = CMatrix::Identity(2 * nt, 2 * nt);
      mc += cert.mu[0] * p.d_sel[0] + cert.mu[1] * p.d_sel[1] + s_i * p.r_user[oi];
      const CRowVector hi = p.ch.stacked(i);
      const double shared_gain =
          (hi * Eigen::LLT<CMatrix>(mc).solve(hi.adjoint())).value().real();
      double t[2];
      for (int j = 0; j < 2; ++j) {
        CMatrix mp = (1.0 + cert.mu[j]) * CMatrix::Identity(nt, nt);
        mp += s_i * p.r_link[oi][j];
        const double gain =
            (p.ch.h[i][j] * Eigen::LLT<CMatrix>(mp).solve(p.ch.h[i][j].adjoint()))
                .value()
                .real();
        t[j] = (gain > 1e-300 ? 1.0 / gain : std::numeric_limits<double>::infinity()) -
               (shared_gain > 1e-300 ? 1.0 / shared_gain : 0.0);
      }
      const int jmin = t[0] <= t[1] ? 0 : 1;
      const double scale =
          std::max({1.0, cert.lambda_p[i][0], cert.lambda_p[i][1]});
      jm.residual = cert.lambda_p[i][jmin] / scale;
      jm.pass = jm.residual <= tol;
    }
    push(jm);
  }

  for (int j = 0; j < 2; ++j) {
    KktCondition cs{"power_complementary_slackness_bs" + std::to_string(j + 1)};
    cs.applicable = true;
    double used = 0.0;
    for (int i = 0; i < 2; ++i)
      used += detail::real_inner(p.d_sel[j], res.v_c[i]) +
              res.v_p[i][j].real().trace();
    cs.residual = std::abs(cert.mu[j] * (p.cfg.p[j] - used)) / std::max(1.0, p.cfg.p[j]);
    cs.pass = cs.residual <= tol;
    push(cs);
  }
  return rep;
}

// Debug dump with complex matrices as nested [re, im] arrays.
inline nlohmann::json problem_to_json(const ConicProblem& p) {
  auto cmat = [](const CMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
      rows.push_back(row);
    }
    return rows;
  };
  nlohmann::json j;
  j["nt"] = p.cfg.n_t;
  j["sigma2"] = p.cfg.noise_var;
  j["P"] = {p.cfg.p[0], p.cfg.p[1]};
  j["targets"] = {
      {"gamma_p", {{p.targets.gamma_p[0][0], p.targets.gamma_p[0][1]},
                   {p.targets.gamma_p[1][0], p.targets.gamma_p[1][1]}}},
      {"gamma_sum_p", {p.targets.gamma_sum_p[0], p.targets.gamma_sum_p[1]}},
      {"gamma_tot", {p.targets.gamma_tot[0], p.targets.gamma_tot[1]}}};
  j["R_user"] = {cmat(p.r_user[0]), cmat(p.r_user[1])};
  j["R_link"] = {{cmat(p.r_link[0][0]), cmat(p.r_link[0][1])},
                 {cmat(p.r_link[1][0]), cmat(p.r_link[1][1])}};
  j["D"] = {cmat(p.d_sel[0]), cmat(p.d_sel[1])};
  return j;
}

inline void save_problem_json(const ConicProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << problem_to_json(p).dump(2) << "\n";
}

}  // namespace bhcoop
