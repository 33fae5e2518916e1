// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "bhcoop/model.hpp"
#include "bhcoop/region.hpp"
#include "bhcoop/rng.hpp"

// Oblivious-BS alternative: the central processor designs joint linear
// precoders and ships each BS a quantized version of its transmit signal
// over the backhaul.  Quantization is the forward test channel
// x_hat = x + q with Gaussian q, whose mutual information is capped by the
// link capacity.  Quantization noise lives in the eigenbasis of the
// transmit covariance (rank <= 2), one variance per mode.

namespace bhcoop {

// Quantization noise variance when each BS has a single antenna: the
// backhaul constraint binds, sigma_q^2 = (|w_1j|^2 + |w_2j|^2) / (2^C - 1).
inline double qnm_quantizer_nt1(double signal_power, double c_bh) {
  if (!(c_bh > 0.0))
    throw std::domain_error("qnm_quantizer_nt1: undefined for zero backhaul");
  if (signal_power < 0.0)
    throw std::invalid_argument("qnm_quantizer_nt1: negative signal power");
  return signal_power / (std::exp2(c_bh) - 1.0);
}

struct QnmDesign {
  std::array<CVector, 2> w;      // joint precoders, length 2 n_t
  std::array<CMatrix, 2> q_cov;  // quantization covariances, n_t x n_t

  static QnmDesign zero(int n_t) {
    QnmDesign d;
    for (int k = 0; k < 2; ++k) {
      d.w[k] = CVector::Zero(2 * n_t);
      d.q_cov[k] = CMatrix::Zero(n_t, n_t);
    }
    return d;
  }
};

// Eigen view of one BS's transmit covariance: at most two active modes with
// per-mode quantization variances.
struct QnmEigenState {
  CMatrix u1;              // n_t x 2 mode basis (columns for nonzero modes)
  Eigen::Vector2d lam{0.0, 0.0};
  Eigen::Vector2d q_var{0.0, 0.0};

  // Mutual information through the test channel on the active modes.
  double backhaul_info() const {
    double acc = 0.0;
    for (int i = 0; i < 2; ++i) {
      if (lam(i) <= 0.0) continue;
      if (q_var(i) <= 0.0) return std::numeric_limits<double>::infinity();
      acc += log2_1p(lam(i) / q_var(i));
    }
    return acc;
  }

  double total_power() const { return lam.sum() + active_noise_power(); }

  double active_noise_power() const {
    double acc = 0.0;
    for (int i = 0; i < 2; ++i)
      if (lam(i) > 0.0) acc += q_var(i);
    return acc;
  }

  CMatrix noise_cov() const {
    CMatrix c = CMatrix::Zero(u1.rows(), u1.rows());
    for (int i = 0; i < 2; ++i)
      if (lam(i) > 0.0 && q_var(i) > 0.0)
        c += q_var(i) * u1.col(i) * u1.col(i).adjoint();
    return c;
  }

  bool reconstructs(const CMatrix& cov, double tol = 1e-10) const {
    CMatrix rec = CMatrix::Zero(u1.rows(), u1.rows());
    for (int i = 0; i < 2; ++i)
      if (lam(i) > 0.0) rec += lam(i) * u1.col(i) * u1.col(i).adjoint();
    return (rec - cov).norm() <= tol * std::max(1.0, cov.norm());
  }
};

// Rank-2 eigen-decomposition of w_1j w_1j^H + w_2j w_2j^H through the 2x2
// Gram matrix, avoiding an n_t x n_t eigensolver.
inline QnmEigenState qnm_eigen_modes(const CVector& w1j, const CVector& w2j) {
  const int nt = static_cast<int>(w1j.size());
  CMatrix a(nt, 2);
  a.col(0) = w1j;
  a.col(1) = w2j;
  const CMatrix gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(gram);
  QnmEigenState st;
  st.u1 = CMatrix::Zero(nt, 2);
  for (int i = 0; i < 2; ++i) {
    const double lam = std::max(0.0, es.eigenvalues()(1 - i));  // descending
    st.lam(i) = lam;
    if (lam > 1e-14) st.u1.col(i) = a * es.eigenvectors().col(1 - i) / std::sqrt(lam);
  }
  return st;
}

// Rate upper bounds of the quantized scheme for a given design,
//   r_k <= log2(1 + |h_k w_k|^2 / (sigma^2 + |h_k w_other|^2
//                                  + sum_j h_kj C_qj h_kj^H)).
// The design must respect the backhaul and power invariants; a mode with
// exactly zero recorded noise is read as the unquantized (ideal-backhaul)
// limit and skipped by the mutual-information check.
inline std::array<double, 2> qnm_rates(const SystemConfig& cfg, const ChannelState& ch,
                                       const QnmDesign& design, double tol = 1e-6) {
  ch.validate(cfg.n_t);
  for (int k = 0; k < 2; ++k)
    if (design.w[k].size() != 2 * cfg.n_t)
      throw std::invalid_argument("qnm_rates: precoder length mismatch");

  for (int j = 0; j < 2; ++j) {
    QnmEigenState st = qnm_eigen_modes(design.w[0].segment(j * cfg.n_t, cfg.n_t),
                                       design.w[1].segment(j * cfg.n_t, cfg.n_t));
    double info = 0.0;
    for (int i = 0; i < 2; ++i) {
      if (st.lam(i) <= 0.0) continue;
      st.q_var(i) = (st.u1.col(i).adjoint() * design.q_cov[j] * st.u1.col(i))
                        .value()
                        .real();
      if (st.q_var(i) > 0.0) info += log2_1p(st.lam(i) / st.q_var(i));
    }
    if (info > cfg.c_bh[j] + tol)
      throw std::invalid_argument("qnm_rates: backhaul constraint violated");
    const double power = st.lam.sum() + design.q_cov[j].real().trace();
    if (power > cfg.p[j] + tol)
      throw std::invalid_argument("qnm_rates: power constraint violated");
  }

  std::array<double, 2> rates{0.0, 0.0};
  for (int k = 0; k < 2; ++k) {
    const CRowVector hk = ch.stacked(k);
    const double useful = std::norm((hk * design.w[k]).value());
    double noise = cfg.noise_var + std::norm((hk * design.w[other(k)]).value());
    for (int j = 0; j < 2; ++j)
      noise += (ch.h[k][j] * design.q_cov[j] * ch.h[k][j].adjoint()).value().real();
    rates[k] = log2_1p(useful / noise);
  }
  return rates;
}

struct QnmOptions {
  int starts = 20;               // random starts on top of the warm start
  std::uint64_t seed = 1;
  int max_iter = 250;            // ascent iterations per continuation stage
  double tol_obj = 1e-7;
  bool warm_start_nm = true;     // seed one start from the all-shared scheme
  RegionOptions nm;              // options for the warm-start boundary solve
};

struct QnmPoint {
  double alpha = 0.0;
  std::array<double, 2> r_pair{0.0, 0.0};
  double sum_rate = 0.0;
  std::array<double, 2> rate_bounds{0.0, 0.0};
  QnmDesign design;
  int best_start = -1;
  bool ok = true;
};

namespace detail {

// Decision vector: Re/Im of both joint precoders, plus one logistic
// backhaul-split parameter per BS when n_t >= 2.
struct QnmEval {
  const SystemConfig* cfg;
  const ChannelState* ch;
  double alpha = 0.5;

  int nt() const { return cfg->n_t; }
  int wdim() const { return 8 * nt(); }
  int dim() const { return wdim() + (nt() >= 2 ? 2 : 0); }

  struct State {
    std::array<CVector, 2> w;
    std::array<QnmEigenState, 2> modes;  // per BS, after projection
    std::array<double, 2> bounds{0.0, 0.0};
    double objective = -std::numeric_limits<double>::infinity();
  };

  State build(const Eigen::VectorXd& theta, double softmin_rho) const {
    State st;
    const int n = nt();
    for (int k = 0; k < 2; ++k) {
      st.w[k] = CVector::Zero(2 * n);
      for (int t = 0; t < 2 * n; ++t)
        st.w[k](t) = Complex(theta(4 * n * k + 2 * t), theta(4 * n * k + 2 * t + 1));
    }
    if (alpha <= 0.0) st.w[0].setZero();
    if (alpha >= 1.0) st.w[1].setZero();

    for (int j = 0; j < 2; ++j) {
      const double c_j = cfg->c_bh[j];
      auto modes_of = [&](void) {
        return qnm_eigen_modes(st.w[0].segment(j * n, n), st.w[1].segment(j * n, n));
      };
      QnmEigenState m = modes_of();
      auto allocate = [&](QnmEigenState& mm) {
        double beta1 = c_j, beta2 = 0.0;
        if (n >= 2 && mm.lam(1) > 1e-12 * std::max(1.0, mm.lam(0))) {
          const double s = 1.0 / (1.0 + std::exp(-theta(wdim() + j)));
          beta1 = c_j * s;
          beta2 = c_j - beta1;
        }
        mm.q_var.setZero();
        if (mm.lam(0) > 0.0)
          mm.q_var(0) = mm.lam(0) / std::max(std::exp2(beta1) - 1.0, 1e-300);
        if (mm.lam(1) > 0.0)
          mm.q_var(1) = mm.lam(1) / std::max(std::exp2(beta2) - 1.0, 1e-300);
      };
      allocate(m);
      const double power = m.total_power();
      if (power > cfg->p[j]) {
        const double scale = std::sqrt(cfg->p[j] / power);
        for (int k = 0; k < 2; ++k) st.w[k].segment(j * n, n) *= scale;
        m = modes_of();
        allocate(m);
      }
      st.modes[j] = m;
    }

    for (int k = 0; k < 2; ++k) {
      const CRowVector hk = ch->stacked(k);
      const double useful = std::norm((hk * st.w[k]).value());
      double noise = cfg->noise_var + std::norm((hk * st.w[other(k)]).value());
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
          if (st.modes[j].lam(i) > 0.0)
            noise += st.modes[j].q_var(i) *
                     std::norm((ch->h[k][j] * st.modes[j].u1.col(i)).value());
      st.bounds[k] = log2_1p(useful / noise);
    }

    if (alpha <= 0.0) {
      st.objective = st.bounds[1];
    } else if (alpha >= 1.0) {
      st.objective = st.bounds[0];
    } else {
      const double g1 = st.bounds[0] / alpha;
      const double g2 = st.bounds[1] / (1.0 - alpha);
      if (softmin_rho <= 0.0) {
        st.objective = std::min(g1, g2);
      } else {
        const double m = std::min(g1, g2);
        st.objective = m - std::log(std::exp(-softmin_rho * (g1 - m)) +
                                    std::exp(-softmin_rho * (g2 - m))) /
                               softmin_rho;
      }
    }
    return st;
  }

  double value(const Eigen::VectorXd& theta, double rho) const {
    return build(theta, rho).objective;
  }
};


// Gradient ascent with numerical gradients and a softmin continuation over
// the balanced-rate objective (the power projection lives inside the
// evaluation, so the search itself is unconstrained).
inline Eigen::VectorXd qnm_ascent(const QnmEval& ev, Eigen::VectorXd theta,
                                  const QnmOptions& opt) {
  const int dim = ev.dim();
  Eigen::VectorXd grad(dim);
  for (double rho : {32.0, 256.0, 2048.0, 0.0}) {
    double step = 0.25;
    double f = ev.value(theta, rho);
    int flat = 0;
    const int iters = rho == 0.0 ? opt.max_iter / 4 : opt.max_iter;
    for (int it = 0; it < iters; ++it) {
      for (int d = 0; d < dim; ++d) {
        const double h = 1e-6 * (1.0 + std::abs(theta(d)));
        Eigen::VectorXd tp = theta, tm = theta;
        tp(d) += h;
        tm(d) -= h;
        grad(d) = (ev.value(tp, rho) - ev.value(tm, rho)) / (2.0 * h);
      }
      const double gnorm = grad.norm();
      if (gnorm < 1e-10) break;

      bool moved = false;
      for (int bt = 0; bt < 25; ++bt) {
        const Eigen::VectorXd cand = theta + (step / gnorm) * grad;
        const double fc = ev.value(cand, rho);
        if (fc > f) {
          const double gain = fc - f;
          theta = cand;
          f = fc;
          step = std::min(step * 1.5, 4.0);
          moved = true;
          flat = gain < opt.tol_obj * (1.0 + std::abs(f)) ? flat + 1 : 0;
          break;
        }
        step *= 0.5;
      }
      if (!moved || flat >= 3) break;
    }
  }
  return theta;
}

}  // namespace detail

// Largest balanced rate point of the quantized scheme along the profile
// r_1 = alpha r, r_2 = (1 - alpha) r: multi-start local search over the
// joint precoders (and per-BS backhaul splits for n_t >= 2), with the
// single-antenna quantizer eliminated in closed form inside the search.
// Only a local optimum is guaranteed; starts are seeded and the reduction
// is deterministic (max objective, lowest start index on ties).
inline QnmPoint qnm_optimize(const SystemConfig& cfg, const ChannelState& ch,
                             double alpha, const QnmOptions& opt = {}) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("qnm_optimize: alpha outside [0,1]");
  cfg.validate();
  ch.validate(cfg.n_t);

  QnmPoint best;
  best.alpha = alpha;
  best.design = QnmDesign::zero(cfg.n_t);
  if (std::min(cfg.c_bh[0], cfg.c_bh[1]) <= 0.0) return best;  // no backhaul

  detail::QnmEval ev{&cfg, &ch, alpha};
  const int dim = ev.dim();
  const int n = cfg.n_t;

  std::vector<Eigen::VectorXd> starts;
  if (opt.warm_start_nm) {
    // The all-shared scheme's beamformers are exactly joint precoders; with
    // generous backhaul this start lands near the optimum already.
    const BoundaryPoint nm = bisect_sum_rate(cfg, ch, alpha, SchemeKind::NM, opt.nm);
    if (nm.r_pair[0] + nm.r_pair[1] > 0.0) {
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
      for (int k = 0; k < 2; ++k)
        for (int t = 0; t < 2 * n; ++t) {
          theta(4 * n * k + 2 * t) = nm.bf.w_c[k](t).real();
          theta(4 * n * k + 2 * t + 1) = nm.bf.w_c[k](t).imag();
        }
      starts.push_back(theta);
    }
  }
  for (int s = 0; s < opt.starts; ++s) {
    rng::Philox gen(opt.seed, static_cast<std::uint64_t>(s) + 1);
    Eigen::VectorXd theta(dim);
    for (int k = 0; k < 2; ++k) {
      CVector w(2 * n);
      for (int t = 0; t < 2 * n; ++t) {
        const auto z = gen.gauss_pair();
        w(t) = Complex(z[0], z[1]);
      }
      for (int j = 0; j < 2; ++j) {
        const double blk = w.segment(j * n, n).squaredNorm();
        if (blk > 0.0) w.segment(j * n, n) *= std::sqrt(0.45 * cfg.p[j] / blk);
      }
      for (int t = 0; t < 2 * n; ++t) {
        theta(4 * n * k + 2 * t) = w(t).real();
        theta(4 * n * k + 2 * t + 1) = w(t).imag();
      }
    }
    for (int d = 8 * n; d < dim; ++d) theta(d) = 0.0;
    starts.push_back(theta);
  }

  double best_obj = -1.0;
  Eigen::VectorXd best_theta;
  for (size_t s = 0; s < starts.size(); ++s) {
    const Eigen::VectorXd theta = detail::qnm_ascent(ev, starts[s], opt);
    const double obj = ev.value(theta, 0.0);
    if (obj > best_obj + 1e-15) {
      best_obj = obj;
      best_theta = theta;
      best.best_start = static_cast<int>(s);
    }
  }
  if (best_obj <= 0.0) return best;  // no feasible nonzero point found

  const auto st = ev.build(best_theta, 0.0);
  best.design.w = st.w;
  for (int j = 0; j < 2; ++j) best.design.q_cov[j] = st.modes[j].noise_cov();
  // A BS whose signal power is floating-point dust transmits nothing: snap
  // its blocks to exact zeros so the design carries no phantom test channel.
  for (int j = 0; j < 2; ++j) {
    if (st.modes[j].lam(0) > 1e-12 * std::max(1.0, cfg.p[j])) continue;
    best.design.w[0].segment(j * n, n).setZero();
    best.design.w[1].segment(j * n, n).setZero();
    best.design.q_cov[j].setZero();
  }
  best.rate_bounds = st.bounds;
  double r = 0.0;
  if (alpha <= 0.0) r = st.bounds[1];
  else if (alpha >= 1.0) r = st.bounds[0];
  else r = std::min(st.bounds[0] / alpha, st.bounds[1] / (1.0 - alpha));
  best.sum_rate = r;
  best.r_pair = {alpha * r, (1.0 - alpha) * r};
  return best;
}

inline std::vector<QnmPoint> qnm_boundary(const SystemConfig& cfg,
                                          const ChannelState& ch,
                                          const std::vector<double>& alpha_grid,
                                          const QnmOptions& opt = {},
                                          int threads = 1) {
  std::vector<QnmPoint> points(alpha_grid.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= alpha_grid.size()) return;
      try {
        points[i] = qnm_optimize(cfg, ch, alpha_grid[i], opt);
      } catch (const std::exception&) {
        points[i] = QnmPoint{};
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

// Same column layout as the rate-splitting boundary CSV; the quantized
// scheme has no private messages, so those columns are zero.
inline std::string qnm_boundary_csv(const std::vector<QnmPoint>& points) {
  std::string out = "alpha,r1,r2,r11p,r12p,r21p,r22p,private_fraction,scheme\n";
  for (const auto& p : points) {
    out += detail::fmt_g(p.alpha) + "," + detail::fmt_g(p.r_pair[0]) + "," +
           detail::fmt_g(p.r_pair[1]) + ",0,0,0,0,0,QNM\n";
  }
  return out;
}

}  // namespace bhcoop
