// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "bhcoop/qnm.hpp"
#include "bhcoop/region.hpp"
#include "bhcoop/rng.hpp"
#include "bhcoop/version.hpp"

// Experiment driver: symmetric-fading channel generation, Monte Carlo
// sum-rate sweeps over (SNR, C) grids, and fixed-channel region comparisons
// across the schemes.  All randomness is counter-based, so outputs are
// byte-identical for a given seed regardless of thread count.

namespace bhcoop {

// Symmetric two-cell fading: direct links CN(0, I), cross links
// CN(0, eps I); eps sets the interference strength.
struct FadingModel {
  double eps = 0.1;
  int n_t = 2;
  std::uint64_t seed = 0;
};

// Channel of sample k; entry (i, j, t) is draw ((2 i + j) n_t + t) of the
// sample's counter-based stream.
inline ChannelState sample_channel(const FadingModel& m, std::uint64_t k) {
  ChannelState ch;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CRowVector v(m.n_t);
      const double sd = std::sqrt((i == j ? 1.0 : m.eps) / 2.0);
      for (int t = 0; t < m.n_t; ++t) {
        const auto z =
            rng::gauss_at(m.seed, k, static_cast<std::uint64_t>((2 * i + j) * m.n_t + t));
        v(t) = Complex(z[0] * sd, z[1] * sd);
      }
      ch.h[i][j] = v;
    }
  return ch;
}

inline std::vector<ChannelState> generate_channels(const FadingModel& m, int n) {
  std::vector<ChannelState> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(sample_channel(m, k));
  return out;
}

// The fixed two-antenna sample channel used by the bundled experiments
// (also shipped as data/sample_channel.json).
inline ChannelState sample_channel_fixture() {
  ChannelState ch;
  ch.h[0][0] = CRowVector(2);
  ch.h[0][0] << Complex(0.2939, -1.1488), Complex(-1.5260, -0.3861);
  ch.h[0][1] = CRowVector(2);
  ch.h[0][1] << Complex(0.3963, -0.2679), Complex(0.8306, 0.6110);
  ch.h[1][0] = CRowVector(2);
  ch.h[1][0] << Complex(-0.7201, -0.3025), Complex(-0.9658, -0.1754);
  ch.h[1][1] = CRowVector(2);
  ch.h[1][1] << Complex(0.1952, -0.0026), Complex(1.7096, 0.4040);
  return ch;
}

inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int k = std::min(threads, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// Monte Carlo sweep description.  SNR is P / sigma^2 in dB, applied to both
// BSs; both backhaul links share each C value.
struct ExperimentSpec {
  std::vector<double> snr_db{0, 5, 10, 15, 20, 25};
  std::vector<double> c_list{1, 5, 10};
  double eps = 0.1;
  int n_t = 2;
  int n_samples = 100;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  double sigma2 = 1.0;
  RegionOptions region;

  void validate() const {
    if (n_samples < 1) throw std::invalid_argument("ExperimentSpec: need samples >= 1");
    if (snr_db.empty() || c_list.empty())
      throw std::invalid_argument("ExperimentSpec: empty grid");
    if (eps < 0.0) throw std::invalid_argument("ExperimentSpec: eps must be >= 0");
  }
};

struct MonteCarloCell {
  double snr_db = 0.0;
  double c = 0.0;
  double mean_sum_rate = 0.0;
  double mean_private_fraction = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

// Mean maximum sum rate (full rate splitting at the requested profile) and
// mean private-rate fraction per grid cell.  Samples whose bisection hit
// solver failures are excluded and counted.
inline std::vector<MonteCarloCell> monte_carlo_sum_rate(const ExperimentSpec& spec,
                                                        int threads = 1) {
  spec.validate();
  const FadingModel fading{spec.eps, spec.n_t, spec.seed};
  const std::vector<ChannelState> channels = generate_channels(fading, spec.n_samples);

  std::vector<MonteCarloCell> cells;
  for (double snr : spec.snr_db)
    for (double c : spec.c_list) {
      SystemConfig cfg;
      cfg.n_t = spec.n_t;
      cfg.noise_var = spec.sigma2;
      const double p = spec.sigma2 * std::pow(10.0, snr / 10.0);
      cfg.p = {p, p};
      cfg.c_bh = {c, c};

      std::vector<double> rate(spec.n_samples, 0.0), pf(spec.n_samples, 0.0);
      std::vector<char> failed(spec.n_samples, 0);
      parallel_for(spec.n_samples, threads, [&](int k) {
        try {
          const BoundaryPoint bp =
              bisect_sum_rate(cfg, channels[k], spec.alpha, SchemeKind::FRS, spec.region);
          if (bp.solver_failures > 0) {
            failed[k] = 1;
          } else {
            rate[k] = bp.r_pair[0] + bp.r_pair[1];
            pf[k] = bp.private_fraction;
          }
        } catch (const std::exception&) {
          failed[k] = 1;
        }
      });

      MonteCarloCell cell;
      cell.snr_db = snr;
      cell.c = c;
      for (int k = 0; k < spec.n_samples; ++k) {
        if (failed[k]) {
          ++cell.n_failed;
          continue;
        }
        ++cell.n_ok;
        cell.mean_sum_rate += rate[k];
        cell.mean_private_fraction += pf[k];
      }
      if (cell.n_ok > 0) {
        cell.mean_sum_rate /= cell.n_ok;
        cell.mean_private_fraction /= cell.n_ok;
      }
      cells.push_back(cell);
    }
  return cells;
}

inline std::string monte_carlo_csv(const std::vector<MonteCarloCell>& cells) {
  std::string out = "snr_db,c,mean_sum_rate,mean_private_fraction,n_samples,n_failed\n";
  for (const auto& c : cells) {
    out += detail::fmt_g(c.snr_db) + "," + detail::fmt_g(c.c) + "," +
           detail::fmt_g(c.mean_sum_rate) + "," +
           detail::fmt_g(c.mean_private_fraction) + "," + std::to_string(c.n_ok) +
           "," + std::to_string(c.n_failed) + "\n";
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct RegionRunResult {
  std::vector<std::string> files;
  nlohmann::json manifest;
  bool partial = false;
};

// Fixed-channel region comparison: one boundary CSV per requested scheme
// ("QNM" runs the quantized sweep) plus a JSON manifest echoing the setup.
inline RegionRunResult fixed_channel_regions(
    const SystemConfig& cfg, const ChannelState& ch,
    const std::vector<std::string>& schemes, const std::vector<double>& alpha_grid,
    const RegionOptions& opt, const QnmOptions& qopt, const std::string& out_dir,
    int threads = 1) {
  std::filesystem::create_directories(out_dir);
  RegionRunResult run;
  run.manifest["version"] = kVersion;
  run.manifest["config"] = scenario_to_json(Scenario{cfg, ch});
  run.manifest["alpha_points"] = alpha_grid.size();
  run.manifest["schemes"] = schemes;
  nlohmann::json timing = nlohmann::json::object();
  nlohmann::json issues = nlohmann::json::object();

  for (const auto& name : schemes) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string csv;
    int failures = 0;
    if (name == "QNM") {
      const auto points = qnm_boundary(cfg, ch, alpha_grid, qopt, threads);
      for (const auto& p : points)
        if (!p.ok) ++failures;
      csv = qnm_boundary_csv(points);
    } else {
      const auto points =
          region_boundary(cfg, ch, scheme_from_string(name), alpha_grid, opt, threads);
      for (const auto& p : points)
        if (!p.ok) ++failures;
      csv = boundary_csv(points, name);
    }
    const std::string path = out_dir + "/region_" + name + ".csv";
    write_file(path, csv);
    run.files.push_back(path);
    timing[name] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    issues[name] = failures;
    if (failures > 0) run.partial = true;
  }
  run.manifest["timing_s"] = timing;
  run.manifest["failed_points"] = issues;
  run.manifest["outputs"] = run.files;
  write_file(out_dir + "/manifest.json", run.manifest.dump(2) + "\n");
  return run;
}

}  // namespace bhcoop
