// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bhcoop/harness.hpp"

// Command line driver:
//   bhcoop region     --config scenario.json   fixed-channel region boundaries
//   bhcoop montecarlo --config sweep.json      fading-average sum-rate table
//   bhcoop qnm        --config scenario.json   quantized-backhaul boundary only
// Exit codes: 0 success, 2 partial failures (skipped samples or points),
// 1 fatal error.

namespace {

using namespace bhcoop;

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  if (j.contains("snr_db")) spec.snr_db = j.at("snr_db").get<std::vector<double>>();
  if (j.contains("C")) spec.c_list = j.at("C").get<std::vector<double>>();
  if (j.contains("eps")) spec.eps = j.at("eps").get<double>();
  if (j.contains("nt")) spec.n_t = j.at("nt").get<int>();
  if (j.contains("samples")) spec.n_samples = j.at("samples").get<int>();
  if (j.contains("sigma2")) spec.sigma2 = j.at("sigma2").get<double>();
  if (j.contains("alpha")) spec.alpha = j.at("alpha").get<double>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

std::vector<std::string> split_schemes(const std::string& arg) {
  if (arg == "all") return {"FRS", "ARS", "IC", "NM", "QNM"};
  std::vector<std::string> out;
  std::string cur;
  for (char c : arg) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  for (const auto& s : out)
    if (s != "QNM") scheme_from_string(s);  // validates
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-cell limited-backhaul beamforming experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string scheme_arg = "all";
  int alpha_points = 41;
  int threads = 1;
  int grid_k = 0;
  int samples = -1;
  int starts = 20;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tol_r = 1e-4;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* copt = cmd->add_option("--config", config_path, "JSON configuration file");
    if (needs_config) copt->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads, "worker threads");
    cmd->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* region = app.add_subcommand("region", "fixed-channel rate-region boundaries");
  add_common(region, true);
  region->add_option("--scheme", scheme_arg, "comma list of FRS,ARS,IC,NM,QNM or 'all'");
  region->add_option("--alpha-points", alpha_points, "points on the profile grid");
  region->add_option("--grid-k", grid_k, "interior probe grid (0 = corners only)");
  region->add_option("--tol-r", tol_r, "bisection resolution in bits/s/Hz");
  region->add_option("--starts", starts, "random starts for the QNM sweep");

  CLI::App* mc = app.add_subcommand("montecarlo", "fading-averaged max sum rate table");
  add_common(mc, false);
  mc->add_option("--samples", samples, "channel samples per grid cell");

  CLI::App* qnm_cmd = app.add_subcommand("qnm", "quantized-backhaul boundary sweep");
  add_common(qnm_cmd, true);
  qnm_cmd->add_option("--alpha-points", alpha_points, "points on the profile grid");
  qnm_cmd->add_option("--starts", starts, "random starts per profile point");

  CLI11_PARSE(app, argc, argv);

  try {
    if (region->parsed() || qnm_cmd->parsed()) {
      const Scenario sc = scenario_from_json(load_json(config_path));
      RegionOptions opt;
      opt.tol_r = tol_r;
      opt.grid_k = grid_k;
      QnmOptions qopt;
      qopt.starts = starts;
      if (seed_set) qopt.seed = seed;
      const auto grid = uniform_alpha_grid(alpha_points);
      const auto schemes = qnm_cmd->parsed() ? std::vector<std::string>{"QNM"}
                                             : split_schemes(scheme_arg);
      const RegionRunResult run = fixed_channel_regions(sc.cfg, sc.ch, schemes, grid,
                                                        opt, qopt, out_dir, threads);
      for (const auto& f : run.files) std::printf("wrote %s\n", f.c_str());
      return run.partial ? 2 : 0;
    }

    // montecarlo
    ExperimentSpec spec =
        config_path.empty() ? ExperimentSpec{} : spec_from_json(load_json(config_path));
    if (samples > 0) spec.n_samples = samples;
    if (seed_set) spec.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const auto cells = monte_carlo_sum_rate(spec, threads);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/montecarlo.csv";
    write_file(csv_path, monte_carlo_csv(cells));

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = spec.seed;
    manifest["config"] = {{"snr_db", spec.snr_db}, {"C", spec.c_list},
                          {"eps", spec.eps},       {"nt", spec.n_t},
                          {"samples", spec.n_samples}, {"sigma2", spec.sigma2},
                          {"alpha", spec.alpha}};
    manifest["timing_s"] = secs;
    manifest["outputs"] = {csv_path};
    int failed = 0;
    for (const auto& c : cells) failed += c.n_failed;
    manifest["excluded_samples"] = failed;
    write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
    std::printf("wrote %s\n", csv_path.c_str());
    return failed > 0 ? 2 : 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
