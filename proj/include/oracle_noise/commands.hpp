#pragma once

// Command implementations behind the oracle_noise CLI. Each returns the
// process exit code: 0 success, 2 configuration error, 3 runtime error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle_noise/config.hpp"
#include "oracle_noise/gaussian_geometry.hpp"
#include "oracle_noise/optimizer.hpp"
#include "oracle_noise/serialization.hpp"
#include "oracle_noise/sweep.hpp"

namespace oracle_noise {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  std::vector<double> eta_grid{0.005, 0.01, 0.02, 0.05, 0.08};
  std::vector<std::uint32_t> n_grid{1, 2, 5, 10, 20};
};

struct OutputFile {
  std::string name;
  std::string contents;
};

namespace detail {

inline RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig cfg = load_run_config(opts.config);
  if (opts.seed) cfg.optimizer.seed = *opts.seed;
  if (opts.output) cfg.output_dir = *opts.output;
  return cfg;
}

/// Writes every file only after all of them are rendered.
inline void write_outputs(const std::filesystem::path& dir, const std::vector<OutputFile>& files) {
  std::filesystem::create_directories(dir);
  for (const auto& f : files) {
    std::ofstream out(dir / f.name, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + (dir / f.name).string());
    out.write(f.contents.data(), static_cast<std::streamsize>(f.contents.size()));
  }
}

}  // namespace detail

/// Runs one optimization and renders latent.bin, weights.json,
/// trajectory.csv and summary.json.
inline std::vector<OutputFile> render_optimization(const RunConfig& cfg) {
  const ToyDenoiser denoiser(cfg.denoiser);
  const EncoderList encoders = cfg.make_encoders();
  const Latent z0 = sample_standard_gaussian(cfg.latent_shape(), cfg.optimizer.seed);

  const auto start = std::chrono::steady_clock::now();
  const OptimizationResult result = optimize(denoiser, encoders, cfg.prompt, z0, cfg.optimizer);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  const double r0 = z0.norm();
  const double r1 = result.latent.norm();
  json summary = {
      {"mode", cfg.optimizer.mode == UpdateMode::spherical ? "spherical" : "euclidean"},
      {"weighting", cfg.optimizer.weighting == TokenWeighting::oracle ? "oracle" : "uniform"},
      {"eta", cfg.optimizer.eta},
      {"iterations", cfg.optimizer.iterations},
      {"iterations_completed", result.trajectory.rows.size()},
      {"stopped_at_stationary_point", result.trajectory.stopped_at_stationary_point},
      {"seed", cfg.optimizer.seed},
      {"max_timestep", cfg.optimizer.max_timestep},
      {"dimension", z0.size()},
      {"initial_objective", result.trajectory.rows.front().objective},
      {"final_objective", result.final_objective},
      {"norm_initial", r0},
      {"norm_final", r1},
      {"norm_drift", std::abs(r1 - r0) / r0},
      {"wall_time_ms", wall_ms},
  };

  const auto latent_bytes = encode_latent(result.latent);
  return {{"latent.bin", std::string(latent_bytes.begin(), latent_bytes.end())},
          {"weights.json", to_json(result.weights).dump() + "\n"},
          {"trajectory.csv", trajectory_csv(result.trajectory)},
          {"summary.json", summary.dump(2) + "\n"}};
}

inline int cmd_optimize(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = detail::resolve_config(opts);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const auto files = render_optimization(cfg);
    detail::write_outputs(cfg.output_dir, files);
    out << "wrote " << files.size() << " files to " << cfg.output_dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

inline int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = detail::resolve_config(opts);
    if (opts.eta_grid.empty() || opts.n_grid.empty()) throw ConfigError("sweep grids must be non-empty");
    for (double e : opts.eta_grid)
      if (!std::isfinite(e) || e < 0.0) throw ConfigError("--eta-grid: values must be finite and non-negative");
    for (auto n : opts.n_grid)
      if (n < 1) throw ConfigError("--n-grid: values must be at least 1");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    const ToyDenoiser denoiser(cfg.denoiser);
    const EncoderList encoders = cfg.make_encoders();
    const Latent z0 = sample_standard_gaussian(cfg.latent_shape(), cfg.optimizer.seed);
    const auto rows = run_sweep(denoiser, encoders, cfg.prompt, z0, cfg.optimizer, opts.eta_grid, opts.n_grid);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    detail::write_outputs(cfg.output_dir, {{"sweep.csv", csv.str()}});
    out << "wrote " << rows.size() << " sweep rows to " << (cfg.output_dir / "sweep.csv").string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

struct StatsOptions {
  std::uint64_t dimension = 16384;
  std::uint64_t annulus_samples = 2000;
  std::uint64_t transport_samples = 100000;
  double epsilon = 0.05;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output;
};

inline int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err) {
  json report;
  try {
    report = {{"annulus", to_json(annulus_stats(opts.dimension, opts.annulus_samples, opts.epsilon, opts.seed))},
              {"transport", to_json(transport_cost(opts.dimension, opts.transport_samples, opts.seed))},
              {"expected_chi_norm", expected_chi_norm(opts.dimension)}};
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    if (opts.output) detail::write_outputs(*opts.output, {{"stats.json", report.dump(2) + "\n"}});
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  out << report.dump(2) << '\n';
  return kExitOk;
}

}  // namespace oracle_noise
