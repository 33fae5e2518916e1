// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

// Two-cell downlink data model: two multi-antenna base stations, two
// single-antenna users, each user's traffic split into private messages
// (served by a single BS) and a shared message (jointly beamformed by both).
// Everything here is a plain value type; all operations are pure.

namespace bhcoop {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;
using CMatrix = Eigen::MatrixXcd;

// Default tolerance on rate inequalities (interior-point accuracy floor).
inline constexpr double kRateTol = 1e-7;
// Default tolerance on power constraints.
inline constexpr double kPowerTol = 1e-6;

// Index of the other user / other base station.
inline constexpr int other(int i) { return 1 - i; }

inline double log2_1p(double x) { return std::log1p(x) / M_LN2; }

// Per-BS power limits P_j, backhaul capacities C_j [bits/s/Hz], receiver
// noise power and per-BS antenna count.
struct SystemConfig {
  std::array<double, 2> p{1.0, 1.0};      // transmit power limits, linear
  std::array<double, 2> c_bh{1.0, 1.0};   // backhaul capacities, bits/s/Hz
  double noise_var = 1.0;                 // sigma^2, linear
  int n_t = 1;                            // antennas per BS

  void validate() const {
    if (!(p[0] > 0.0) || !(p[1] > 0.0))
      throw std::invalid_argument("SystemConfig: power limits must be > 0");
    if (c_bh[0] < 0.0 || c_bh[1] < 0.0)
      throw std::invalid_argument("SystemConfig: backhaul capacities must be >= 0");
    if (!(noise_var > 0.0))
      throw std::invalid_argument("SystemConfig: noise variance must be > 0");
    if (n_t < 1)
      throw std::invalid_argument("SystemConfig: need at least one antenna");
  }
};

// Channel rows h_ij (user i, BS j), each of length n_t.  The stacked row
// h_i = [h_i1 h_i2] is the user's whole channel.
struct ChannelState {
  std::array<std::array<CRowVector, 2>, 2> h;

  int n_t() const { return static_cast<int>(h[0][0].size()); }

  CRowVector stacked(int user) const {
    CRowVector hi(h[user][0].size() + h[user][1].size());
    hi << h[user][0], h[user][1];
    return hi;
  }

  void validate(int expected_nt) const {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        if (h[i][j].size() != expected_nt)
          throw std::invalid_argument("ChannelState: channel row length mismatch");
        if (!h[i][j].allFinite())
          throw std::invalid_argument("ChannelState: non-finite channel entry");
      }
  }
};

// Beamformers in sqrt-power units: shared w_c[i] (length 2 n_t, block j
// owned by BS j) and private w_p[i][j] (length n_t, at BS j for user i).
struct BeamformerSet {
  std::array<CVector, 2> w_c;
  std::array<std::array<CVector, 2>, 2> w_p;

  static BeamformerSet zero(int n_t) {
    BeamformerSet bf;
    for (int i = 0; i < 2; ++i) {
      bf.w_c[i] = CVector::Zero(2 * n_t);
      for (int j = 0; j < 2; ++j) bf.w_p[i][j] = CVector::Zero(n_t);
    }
    return bf;
  }

  int n_t() const { return static_cast<int>(w_p[0][0].size()); }

  // BS j's block of the shared beamformer for user i.
  auto shared_block(int i, int j) const { return w_c[i].segment(j * n_t(), n_t()); }

  void validate(int expected_nt) const {
    for (int i = 0; i < 2; ++i) {
      if (w_c[i].size() != 2 * expected_nt)
        throw std::invalid_argument("BeamformerSet: shared beamformer length mismatch");
      for (int j = 0; j < 2; ++j)
        if (w_p[i][j].size() != expected_nt)
          throw std::invalid_argument("BeamformerSet: private beamformer length mismatch");
    }
  }
};

// Rate 6-tuple (r_1, r_11p, r_12p, r_2, r_21p, r_22p), bits/s/Hz.  The
// shared rate of user i is the remainder r_i - r_i1p - r_i2p.
struct RateSplit {
  std::array<double, 2> r{0.0, 0.0};
  std::array<std::array<double, 2>, 2> r_p{{{0.0, 0.0}, {0.0, 0.0}}};

  static RateSplit zero() { return RateSplit{}; }

  double shared_rate(int i) const { return r[i] - r_p[i][0] - r_p[i][1]; }
  double sum_rate() const { return r[0] + r[1]; }
  double private_sum() const {
    return r_p[0][0] + r_p[0][1] + r_p[1][0] + r_p[1][1];
  }

  void validate(double tol = 1e-12) const {
    for (int i = 0; i < 2; ++i) {
      if (r[i] < -tol) throw std::invalid_argument("RateSplit: negative total rate");
      for (int j = 0; j < 2; ++j)
        if (r_p[i][j] < -tol)
          throw std::invalid_argument("RateSplit: negative private rate");
      if (shared_rate(i) < -tol)
        throw std::invalid_argument("RateSplit: private rates exceed total rate");
    }
  }
};

// Total interference plus noise power at `user`: its own noise floor plus
// everything carrying the other user's data,
//   sigma_i^2 = sigma^2 + sum_j |h_ij w_(other)j,p|^2 + |h_i w_(other),c|^2.
inline double interference_plus_noise(const SystemConfig& cfg, const ChannelState& ch,
                                      const BeamformerSet& bf, int user) {
  ch.validate(cfg.n_t);
  bf.validate(cfg.n_t);
  const int o = other(user);
  double acc = cfg.noise_var;
  for (int j = 0; j < 2; ++j) acc += std::norm((ch.h[user][j] * bf.w_p[o][j]).value());
  acc += std::norm((ch.stacked(user) * bf.w_c[o]).value());
  return acc;
}

// Per-BS spent power: sum over users of the BS's shared block plus its
// private beamformer.
inline std::array<double, 2> power_usage(const BeamformerSet& bf) {
  std::array<double, 2> used{0.0, 0.0};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i)
      used[j] += bf.shared_block(i, j).squaredNorm() + bf.w_p[i][j].squaredNorm();
  return used;
}

// Achievability of a rate split on the over-the-air segment: checks, per
// user, the per-BS private-rate bounds, the private-sum bound and the
// total-rate bound, all with interference treated as noise.
inline bool air_region_check(const SystemConfig& cfg, const ChannelState& ch,
                             const BeamformerSet& bf, const RateSplit& rs,
                             double tol = kRateTol) {
  rs.validate();
  ch.validate(cfg.n_t);
  bf.validate(cfg.n_t);
  for (int i = 0; i < 2; ++i) {
    const double noise = interference_plus_noise(cfg, ch, bf, i);
    double private_power_sum = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double pw = std::norm((ch.h[i][j] * bf.w_p[i][j]).value());
      private_power_sum += pw;
      if (rs.r_p[i][j] > log2_1p(pw / noise) + tol) return false;
    }
    if (rs.r_p[i][0] + rs.r_p[i][1] > log2_1p(private_power_sum / noise) + tol)
      return false;
    const double shared_power = std::norm((ch.stacked(i) * bf.w_c[i]).value());
    if (rs.r[i] > log2_1p((shared_power + private_power_sum) / noise) + tol)
      return false;
  }
  return true;
}

// Backhaul feasibility of a rate split: link j carries all of both users'
// traffic except the private parts originating at the other BS, and the sum
// rate cannot exceed the total backhaul capacity.
inline bool backhaul_check(const SystemConfig& cfg, const RateSplit& rs,
                           double tol = kRateTol) {
  rs.validate();
  const double sum = rs.sum_rate();
  for (int j = 0; j < 2; ++j) {
    const int oj = other(j);
    if (sum - rs.r_p[0][oj] - rs.r_p[1][oj] > cfg.c_bh[j] + tol) return false;
  }
  return sum <= cfg.c_bh[0] + cfg.c_bh[1] + tol;
}

// ---------------------------------------------------------------------------
// JSON scenario format:
//   {"nt":2, "sigma2":1.0, "P":[10,10], "C":[1,1],
//    "H":[h11, h12, h21, h22]}  with each h a list of [re, im] pairs.

struct Scenario {
  SystemConfig cfg;
  ChannelState ch;
};

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["nt"] = sc.cfg.n_t;
  j["sigma2"] = sc.cfg.noise_var;
  j["P"] = {sc.cfg.p[0], sc.cfg.p[1]};
  j["C"] = {sc.cfg.c_bh[0], sc.cfg.c_bh[1]};
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < 2; ++i)
    for (int jj = 0; jj < 2; ++jj) {
      nlohmann::json row = nlohmann::json::array();
      for (int t = 0; t < sc.cfg.n_t; ++t)
        row.push_back({sc.ch.h[i][jj](t).real(), sc.ch.h[i][jj](t).imag()});
      rows.push_back(row);
    }
  j["H"] = rows;
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  sc.cfg.n_t = j.at("nt").get<int>();
  sc.cfg.noise_var = j.at("sigma2").get<double>();
  sc.cfg.p = {j.at("P").at(0).get<double>(), j.at("P").at(1).get<double>()};
  sc.cfg.c_bh = {j.at("C").at(0).get<double>(), j.at("C").at(1).get<double>()};
  sc.cfg.validate();
  const auto& rows = j.at("H");
  if (rows.size() != 4)
    throw std::invalid_argument("scenario: H must hold the four rows h11,h12,h21,h22");
  for (int i = 0; i < 2; ++i)
    for (int jj = 0; jj < 2; ++jj) {
      const auto& row = rows.at(2 * i + jj);
      CRowVector v(sc.cfg.n_t);
      if (static_cast<int>(row.size()) != sc.cfg.n_t)
        throw std::invalid_argument("scenario: channel row length must equal nt");
      for (int t = 0; t < sc.cfg.n_t; ++t)
        v(t) = Complex(row.at(t).at(0).get<double>(), row.at(t).at(1).get<double>());
      sc.ch.h[i][jj] = v;
    }
  sc.ch.validate(sc.cfg.n_t);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

}  // namespace bhcoop
