// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Dense>

// Small dense conic solver for problems of the form
//
//   min  sum_b <C_b, X_b> + c_l . x_l
//   s.t. sum_b <A_mb, X_b> + a_ml . x_l = b_m,   m = 1..M,
//        each X_b real symmetric PSD,  x_l >= 0,
//
// i.e. trace-inequality rows (with slacks folded into x_l) over a fixed set
// of PSD blocks.  The method is a Mehrotra predictor-corrector primal-dual
// interior point with Nesterov-Todd scaling, run on the homogeneous
// self-dual embedding
//
//   A x - b tau = 0,   A' y + z - c tau = 0,   <c,x> - b.y + kappa = 0,
//
// so infeasible instances terminate with a certificate (a dual improving
// ray y, z with A'y + z = 0, b.y > 0) instead of diverging.  Problems here
// are tiny (blocks of order <= 8), so the per-iteration Schur complement is
// formed densely and factored with a Cholesky.

namespace bhcoop::ipm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct BlockDims {
  std::vector<int> sdp;  // one entry per PSD block
  int lin = 0;           // number of nonnegative scalars

  int degree() const {
    int nu = lin;
    for (int n : sdp) nu += n;
    return nu;
  }
};

struct BlockRow {
  std::vector<Mat> a_sdp;  // coefficient per PSD block (symmetric)
  Vec a_lin;               // coefficients on the nonnegative scalars
  double rhs = 0.0;
};

struct BlockProblem {
  BlockDims dims;
  std::vector<Mat> c_sdp;
  Vec c_lin;
  std::vector<BlockRow> rows;
};

enum class IpmStatus { optimal, primal_infeasible, dual_infeasible, numerical_failure };

struct IpmOptions {
  int max_iter = 100;
  double tol = 1e-8;         // feasibility / gap tolerance
  double tol_infeas = 1e-8;  // certificate quality for infeasibility claims
  // Fallback thresholds when roundoff stalls the endgame: the best iterate
  // is still accepted (flagged inexact) if it meets these.
  double tol_feas_relaxed = 5e-7;
  double tol_gap_relaxed = 2e-6;
  double step_frac = 0.99;
  bool trace = false;        // per-iteration convergence log on stderr
};

struct IpmResult {
  IpmStatus status = IpmStatus::numerical_failure;
  std::vector<Mat> x_sdp;
  Vec x_lin;
  Vec y;  // row multipliers (free sign; inequality orientation is the caller's)
  std::vector<Mat> z_sdp;
  Vec z_lin;
  double objective = 0.0;
  double rel_gap = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  int iterations = 0;
  bool inexact = false;  // converged only to the relaxed thresholds
};

namespace detail {

// A point in (or paired with) the cone: the SDP blocks plus the orthant part.
struct ConeVec {
  std::vector<Mat> s;
  Vec l;

  static ConeVec zero(const BlockDims& d) {
    ConeVec v;
    v.s.reserve(d.sdp.size());
    for (int n : d.sdp) v.s.push_back(Mat::Zero(n, n));
    v.l = Vec::Zero(d.lin);
    return v;
  }
  static ConeVec identity(const BlockDims& d) {
    ConeVec v;
    v.s.reserve(d.sdp.size());
    for (int n : d.sdp) v.s.push_back(Mat::Identity(n, n));
    v.l = Vec::Ones(d.lin);
    return v;
  }

  double dot(const ConeVec& o) const {
    double acc = l.dot(o.l);
    for (size_t b = 0; b < s.size(); ++b) acc += s[b].cwiseProduct(o.s[b]).sum();
    return acc;
  }
  double norm() const { return std::sqrt(dot(*this)); }

  void add_scaled(double a, const ConeVec& o) {
    for (size_t b = 0; b < s.size(); ++b) s[b] += a * o.s[b];
    l += a * o.l;
  }
};

// Nesterov-Todd scaling per block: matrices R with R' Z R = R^-1 X R^-T =
// diag(lam), computed from Cholesky factors and one small SVD.
struct Scaling {
  std::vector<Mat> r, rinv;
  std::vector<Vec> lam;  // scaled-point spectrum per block
  Vec w_lin, lam_lin;
  bool ok = false;
};

inline bool chol_lower(const Mat& a, Mat& l) {
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) return false;
  l = llt.matrixL();
  return true;
}

inline Scaling compute_scaling(const ConeVec& x, const ConeVec& z) {
  Scaling sc;
  const size_t nb = x.s.size();
  sc.r.resize(nb);
  sc.rinv.resize(nb);
  sc.lam.resize(nb);
  for (size_t b = 0; b < nb; ++b) {
    Mat l1, l2;
    if (!chol_lower(x.s[b], l1) || !chol_lower(z.s[b], l2)) return sc;
    Eigen::JacobiSVD<Mat> svd(l2.transpose() * l1,
                              Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec& sig = svd.singularValues();
    if (sig.minCoeff() <= 0.0) return sc;
    const Vec is = sig.cwiseSqrt().cwiseInverse();
    sc.r[b] = l1 * svd.matrixV() * is.asDiagonal();
    sc.rinv[b] = is.asDiagonal() * svd.matrixU().transpose() * l2.transpose();
    sc.lam[b] = sig;
  }
  sc.w_lin = (x.l.array() / z.l.array()).sqrt().matrix();
  sc.lam_lin = (x.l.array() * z.l.array()).sqrt().matrix();
  sc.ok = sc.w_lin.allFinite() && sc.lam_lin.allFinite();
  return sc;
}

}  // namespace detail

class IpmSolver {
 public:
  IpmSolver(const BlockProblem& prob, const IpmOptions& opt = {})
      : p_(prob), opt_(opt) {}

  IpmResult solve() {
    using detail::ConeVec;
    const int m = static_cast<int>(p_.rows.size());
    const size_t nb = p_.dims.sdp.size();
    const double nu = p_.dims.degree();

    // Row equilibration; multipliers are unscaled on the way out.
    row_scale_.assign(m, 1.0);
    Vec b(m);
    for (int i = 0; i < m; ++i) {
      double nrm2 = p_.rows[i].a_lin.squaredNorm();
      for (size_t bk = 0; bk < nb; ++bk) nrm2 += p_.rows[i].a_sdp[bk].squaredNorm();
      row_scale_[i] = 1.0 / std::clamp(std::sqrt(nrm2), 1e-6, 1e6);
      b(i) = p_.rows[i].rhs * row_scale_[i];
    }

    ConeVec c = ConeVec::zero(p_.dims);
    for (size_t bk = 0; bk < nb; ++bk) c.s[bk] = p_.c_sdp[bk];
    c.l = p_.c_lin;
    const double cnorm = c.norm();
    const double bnorm = b.norm();

    ConeVec x = ConeVec::identity(p_.dims);
    ConeVec z = ConeVec::identity(p_.dims);
    Vec y = Vec::Zero(m);
    double tau = 1.0, kappa = 1.0;

    IpmResult res;
    const double mu0 = (x.dot(z) + tau * kappa) / (nu + 1.0);

    for (int iter = 0; iter < opt_.max_iter; ++iter) {
      res.iterations = iter;

      // Residuals of the self-dual system.
      Vec rp = apply_rows(x) - tau * b;
      ConeVec rd = adjoint(y);
      rd.add_scaled(1.0, z);
      rd.add_scaled(-tau, c);
      const double cx = c.dot(x);
      const double by = b.dot(y);
      const double rg = cx - by + kappa;
      const double xz = x.dot(z);
      const double mu = (xz + tau * kappa) / (nu + 1.0);

      const double pcost = cx / tau;
      const double pres = rp.norm() / (tau * (1.0 + bnorm));
      const double dres = rd.norm() / (tau * (1.0 + cnorm));
      const double relgap = xz / (tau * tau) / std::max(1.0, std::abs(pcost));
      if (opt_.trace)
        std::fprintf(stderr,
                     "ipm it=%2d pres=%.2e dres=%.2e gap=%.2e tau=%.2e kap=%.2e "
                     "mu=%.2e obj=%.6e\n",
                     iter, pres, dres, relgap, tau, kappa, mu, pcost);
      if (pres < opt_.tol && dres < opt_.tol && relgap < opt_.tol) {
        finish(res, x, y, z, tau, IpmStatus::optimal, pres, dres, relgap);
        return res;
      }

      // Infeasibility certificates (normalized Farkas rays).
      if (by > 0.0) {
        ConeVec ray = adjoint(y);
        ray.add_scaled(1.0, z);
        if (ray.norm() / std::max(1.0, cnorm) <= opt_.tol_infeas * by) {
          finish(res, x, y, z, by, IpmStatus::primal_infeasible, pres, dres, relgap);
          return res;
        }
      }
      if (cx < 0.0) {
        if (apply_rows(x).norm() / std::max(1.0, bnorm) <= opt_.tol_infeas * (-cx)) {
          finish(res, x, y, z, -cx, IpmStatus::dual_infeasible, pres, dres, relgap);
          return res;
        }
      }
      // Keep iterating at very small mu: infeasible instances drive tau to
      // zero fast and their certificates mature a few iterations later.
      if (mu < 1e-22 * mu0 || !std::isfinite(mu)) break;

      // Track the most accurate iterate seen; very small mu erodes the
      // Schur system and late iterations can drift back above tolerance.
      const double worst =
          std::max({pres / opt_.tol_feas_relaxed, dres / opt_.tol_feas_relaxed,
                    relgap / opt_.tol_gap_relaxed});
      if (worst < 0.95 * best_worst_) {
        best_worst_ = worst;
        best_x_ = x;
        best_y_ = y;
        best_z_ = z;
        best_tau_ = tau;
        stall_ = 0;
      } else if (++stall_ >= 10 && best_worst_ <= 1.0) {
        break;  // endgame noise; the snapshot already qualifies
      }

      auto sc = detail::compute_scaling(x, z);
      if (!sc.ok) break;

      // Per-iteration quantities for the Schur system M dy = ...
      // with M_mn = <A_m, W A_n W>.
      std::vector<ConeVec> waw;
      waw.reserve(m);
      for (int i = 0; i < m; ++i) waw.push_back(congruence(sc, row_vec(i)));
      ConeVec wcw = congruence(sc, c);
      Mat schur(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j)
          schur(i, j) = schur(j, i) = row_vec_dot(i, waw[j]);
      Eigen::LLT<Mat> schur_fac;
      if (!factor_spd(schur, schur_fac)) break;
      schur_mat_ = schur;
      Vec u(m);
      for (int i = 0; i < m; ++i) u(i) = row_vec_dot(i, wcw);
      const double cw = c.dot(wcw);

      // Affine (predictor) direction: full residual reduction, mu -> 0.
      ConeVec d_aff = ConeVec::zero(p_.dims);
      for (size_t bk = 0; bk < nb; ++bk)
        d_aff.s[bk] = (-sc.lam[bk].cwiseProduct(sc.lam[bk])).asDiagonal();
      d_aff.l = -sc.lam_lin.cwiseProduct(sc.lam_lin);
      Dir aff = newton_dir(sc, schur_fac, waw, wcw, u, cw, c, b, rp, rd, rg, tau,
                           kappa, 1.0, d_aff, -tau * kappa);
      if (!aff.ok) break;
      const double alpha_aff =
          std::min(1.0, max_step(sc, x, z, tau, kappa, aff));
      double sigma = std::pow(1.0 - alpha_aff, 3);
      sigma = std::clamp(sigma, 0.0, 1.0);

      // Corrector: recenter to sigma*mu and subtract the Mehrotra
      // second-order term computed from the scaled affine direction.
      ConeVec d_comb = ConeVec::zero(p_.dims);
      for (size_t bk = 0; bk < nb; ++bk) {
        const Mat dxt = sc.rinv[bk] * aff.dx.s[bk] * sc.rinv[bk].transpose();
        const Mat dzt = sc.r[bk].transpose() * aff.dz.s[bk] * sc.r[bk];
        Mat corr = 0.5 * (dxt * dzt + dzt * dxt);
        d_comb.s[bk] = Mat((-sc.lam[bk].cwiseProduct(sc.lam[bk])).asDiagonal());
        d_comb.s[bk].diagonal().array() += sigma * mu;
        d_comb.s[bk] -= corr;
      }
      d_comb.l = -sc.lam_lin.cwiseProduct(sc.lam_lin) -
                 aff.dx.l.cwiseProduct(aff.dz.l);
      d_comb.l.array() += sigma * mu;
      const double dtk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
      Dir dir = newton_dir(sc, schur_fac, waw, wcw, u, cw, c, b, rp, rd, rg, tau,
                           kappa, 1.0 - sigma, d_comb, dtk);
      if (!dir.ok) break;

      double alpha = opt_.step_frac * max_step(sc, x, z, tau, kappa, dir);
      alpha = std::min(1.0, alpha);
      if (alpha < 1e-11) break;

      x.add_scaled(alpha, dir.dx);
      z.add_scaled(alpha, dir.dz);
      y += alpha * dir.dy;
      tau += alpha * dir.dtau;
      kappa += alpha * dir.dkappa;
      for (size_t bk = 0; bk < nb; ++bk) {
        x.s[bk] = 0.5 * (x.s[bk] + x.s[bk].transpose()).eval();
        z.s[bk] = 0.5 * (z.s[bk] + z.s[bk].transpose()).eval();
      }
      if (!(tau > 0.0) || !(kappa > 0.0)) break;
    }

    // Convergence may have been reached on the very last step, or earlier at
    // an iterate that later eroded; accept the final or best iterate, the
    // latter flagged inexact when only the relaxed thresholds hold.
    {
      auto measure = [&](const ConeVec& xx, const Vec& yy, const ConeVec& zz,
                         double tt, double& pr, double& dr, double& rl) {
        Vec rp = apply_rows(xx) - tt * b;
        ConeVec rd = adjoint(yy);
        rd.add_scaled(1.0, zz);
        rd.add_scaled(-tt, c);
        pr = rp.norm() / (tt * (1.0 + bnorm));
        dr = rd.norm() / (tt * (1.0 + cnorm));
        rl = xx.dot(zz) / (tt * tt) / std::max(1.0, std::abs(c.dot(xx) / tt));
      };
      double pr, dr, rl;
      measure(x, y, z, tau, pr, dr, rl);
      if (pr < opt_.tol && dr < opt_.tol && rl < opt_.tol) {
        finish(res, x, y, z, tau, IpmStatus::optimal, pr, dr, rl);
        return res;
      }
      if (best_worst_ <= 1.0) {
        measure(best_x_, best_y_, best_z_, best_tau_, pr, dr, rl);
        finish(res, best_x_, best_y_, best_z_, best_tau_, IpmStatus::optimal, pr,
               dr, rl);
        res.inexact = !(pr < opt_.tol && dr < opt_.tol && rl < opt_.tol);
        return res;
      }
      // Relaxed certificate acceptance for rays that were still maturing.
      const double by = b.dot(y);
      if (by > 0.0) {
        ConeVec ray = adjoint(y);
        ray.add_scaled(1.0, z);
        if (ray.norm() / std::max(1.0, cnorm) <= 1e-6 * by) {
          finish(res, x, y, z, by, IpmStatus::primal_infeasible, pr, dr, rl);
          res.inexact = true;
          return res;
        }
      }
      const double cx = c.dot(x);
      if (cx < 0.0 &&
          apply_rows(x).norm() / std::max(1.0, bnorm) <= 1e-6 * (-cx)) {
        finish(res, x, y, z, -cx, IpmStatus::dual_infeasible, pr, dr, rl);
        res.inexact = true;
        return res;
      }
    }
    finish(res, x, y, z, tau, IpmStatus::numerical_failure, res.primal_res,
           res.dual_res, res.rel_gap);
    return res;
  }

 private:
  struct Dir {
    detail::ConeVec dx, dz;
    Vec dy;
    double dtau = 0.0, dkappa = 0.0;
    bool ok = false;
  };

  detail::ConeVec row_vec(int i) const {
    detail::ConeVec v;
    v.s = p_.rows[i].a_sdp;
    for (auto& s : v.s) s *= row_scale_[i];
    v.l = row_scale_[i] * p_.rows[i].a_lin;
    return v;
  }

  double row_vec_dot(int i, const detail::ConeVec& v) const {
    double acc = row_scale_[i] * p_.rows[i].a_lin.dot(v.l);
    for (size_t bk = 0; bk < v.s.size(); ++bk)
      acc += row_scale_[i] * p_.rows[i].a_sdp[bk].cwiseProduct(v.s[bk]).sum();
    return acc;
  }

  Vec apply_rows(const detail::ConeVec& v) const {
    Vec out(p_.rows.size());
    for (size_t i = 0; i < p_.rows.size(); ++i)
      out(static_cast<int>(i)) = row_vec_dot(static_cast<int>(i), v);
    return out;
  }

  detail::ConeVec adjoint(const Vec& y) const {
    detail::ConeVec v = detail::ConeVec::zero(p_.dims);
    for (size_t i = 0; i < p_.rows.size(); ++i) {
      const double w = y(static_cast<int>(i)) * row_scale_[i];
      for (size_t bk = 0; bk < v.s.size(); ++bk)
        v.s[bk] += w * p_.rows[i].a_sdp[bk];
      v.l += w * p_.rows[i].a_lin;
    }
    return v;
  }

  // W v W with W = R R' per block; diagonal w^2 on the orthant part.
  detail::ConeVec congruence(const detail::Scaling& sc,
                             const detail::ConeVec& v) const {
    detail::ConeVec out = v;
    for (size_t bk = 0; bk < v.s.size(); ++bk)
      out.s[bk] = sc.r[bk] * (sc.r[bk].transpose() * v.s[bk] * sc.r[bk]) *
                  sc.r[bk].transpose();
    out.l = sc.w_lin.cwiseProduct(sc.w_lin).cwiseProduct(v.l);
    return out;
  }

  // Two rounds of iterative refinement keep the directions accurate once mu
  // drives the Schur matrix badly ill-conditioned.
  Vec solve_refined(const Eigen::LLT<Mat>& fac, const Vec& rhs) const {
    Vec d = fac.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) d += fac.solve(rhs - schur_mat_ * d);
    return d;
  }

  static bool factor_spd(Mat a, Eigen::LLT<Mat>& fac) {
    double jitter = 0.0;
    const double scale = std::max(1e-30, a.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 4; ++attempt) {
      fac.compute(a + jitter * Mat::Identity(a.rows(), a.cols()));
      if (fac.info() == Eigen::Success) return true;
      jitter = (jitter == 0.0) ? 1e-13 * scale : jitter * 100.0;
    }
    return false;
  }

  Dir newton_dir(const detail::Scaling& sc, const Eigen::LLT<Mat>& schur_fac,
                 const std::vector<detail::ConeVec>& waw,
                 const detail::ConeVec& wcw, const Vec& u, double cw,
                 const detail::ConeVec& c, const Vec& b, const Vec& rp,
                 const detail::ConeVec& rd, double rg, double tau, double kappa,
                 double eta, const detail::ConeVec& d_target,
                 double dtau_target) const {
    using detail::ConeVec;
    Dir dir;
    const int m = static_cast<int>(p_.rows.size());

    // E = G + eta * rd, where G carries the complementarity target back to
    // the unscaled space: G = Rinv' Lambda^-1(D) Rinv.
    ConeVec e = ConeVec::zero(p_.dims);
    for (size_t bk = 0; bk < e.s.size(); ++bk) {
      const Vec& lam = sc.lam[bk];
      const int n = static_cast<int>(lam.size());
      Mat dh(n, n);
      for (int a = 0; a < n; ++a)
        for (int bq = 0; bq < n; ++bq)
          dh(a, bq) = 2.0 * d_target.s[bk](a, bq) / (lam(a) + lam(bq));
      e.s[bk] = sc.rinv[bk].transpose() * dh * sc.rinv[bk] + eta * rd.s[bk];
    }
    e.l = d_target.l.cwiseQuotient(sc.lam_lin).cwiseQuotient(sc.w_lin) +
          eta * rd.l;

    Vec q1(m);
    for (int i = 0; i < m; ++i) q1(i) = -eta * rp(i) - waw[i].dot(e);
    const double rhs3 = -eta * rg - wcw.dot(e) - dtau_target / tau;

    const Vec y1 = solve_refined(schur_fac, q1);
    const Vec y2 = solve_refined(schur_fac, u + b);
    const Vec umb = u - b;
    const double denom = umb.dot(y2) - cw - kappa / tau;
    if (std::abs(denom) < 1e-300) return dir;
    dir.dtau = (rhs3 - umb.dot(y1)) / denom;
    dir.dy = y1 + dir.dtau * y2;

    ConeVec at_dy = adjoint(dir.dy);
    ConeVec t = at_dy;
    t.add_scaled(1.0, e);
    t.add_scaled(-dir.dtau, c);
    dir.dx = congruence(sc, t);

    dir.dz = ConeVec::zero(p_.dims);
    dir.dz.add_scaled(-eta, rd);
    dir.dz.add_scaled(-1.0, at_dy);
    dir.dz.add_scaled(dir.dtau, c);

    dir.dkappa = (dtau_target - kappa * dir.dtau) / tau;
    dir.ok = true;
    return dir;
  }

  // Largest t with x + t dx, z + t dz, tau + t dtau, kappa + t dkappa all in
  // the cone (evaluated in the scaled space for the PSD blocks).
  double max_step(const detail::Scaling& sc, const detail::ConeVec& x,
                  const detail::ConeVec& z, double tau, double kappa,
                  const Dir& dir) const {
    double t = std::numeric_limits<double>::infinity();
    for (size_t bk = 0; bk < x.s.size(); ++bk) {
      const Vec inv_sqrt = sc.lam[bk].cwiseSqrt().cwiseInverse();
      Mat sx = sc.rinv[bk] * dir.dx.s[bk] * sc.rinv[bk].transpose();
      sx = inv_sqrt.asDiagonal() * sx * inv_sqrt.asDiagonal();
      Mat sz = sc.r[bk].transpose() * dir.dz.s[bk] * sc.r[bk];
      sz = inv_sqrt.asDiagonal() * sz * inv_sqrt.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Mat> ex(0.5 * (sx + sx.transpose()),
                                            Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<Mat> ez(0.5 * (sz + sz.transpose()),
                                            Eigen::EigenvaluesOnly);
      const double ex_min = ex.eigenvalues().minCoeff();
      const double ez_min = ez.eigenvalues().minCoeff();
      if (ex_min < 0.0) t = std::min(t, -1.0 / ex_min);
      if (ez_min < 0.0) t = std::min(t, -1.0 / ez_min);
    }
    for (int i = 0; i < dir.dx.l.size(); ++i) {
      if (dir.dx.l(i) < 0.0) t = std::min(t, -x.l(i) / dir.dx.l(i));
      if (dir.dz.l(i) < 0.0) t = std::min(t, -z.l(i) / dir.dz.l(i));
    }
    if (dir.dtau < 0.0) t = std::min(t, -tau / dir.dtau);
    if (dir.dkappa < 0.0) t = std::min(t, -kappa / dir.dkappa);
    return t;
  }

  void finish(IpmResult& res, const detail::ConeVec& x, const Vec& y,
              const detail::ConeVec& z, double scale, IpmStatus status,
              double pres, double dres, double relgap) const {
    res.status = status;
    const double s = (scale > 0.0 && std::isfinite(scale)) ? scale : 1.0;
    res.x_sdp = x.s;
    for (auto& mtx : res.x_sdp) mtx /= s;
    res.x_lin = x.l / s;
    res.y = y / s;
    for (size_t i = 0; i < row_scale_.size(); ++i)
      res.y(static_cast<int>(i)) *= row_scale_[i];
    res.z_sdp = z.s;
    for (auto& mtx : res.z_sdp) mtx /= s;
    res.z_lin = z.l / s;
    res.objective = 0.0;
    for (size_t bk = 0; bk < res.x_sdp.size(); ++bk)
      res.objective += p_.c_sdp[bk].cwiseProduct(res.x_sdp[bk]).sum();
    res.objective += p_.c_lin.dot(res.x_lin);
    res.primal_res = pres;
    res.dual_res = dres;
    res.rel_gap = relgap;
  }

  BlockProblem p_;
  IpmOptions opt_;
  std::vector<double> row_scale_;
  Mat schur_mat_;
  detail::ConeVec best_x_, best_z_;
  Vec best_y_;
  double best_tau_ = 1.0;
  double best_worst_ = std::numeric_limits<double>::infinity();
  int stall_ = 0;
};

inline IpmResult solve_block_problem(const BlockProblem& prob,
                                     const IpmOptions& opt = {}) {
  return IpmSolver(prob, opt).solve();
}

}  // namespace bhcoop::ipm
