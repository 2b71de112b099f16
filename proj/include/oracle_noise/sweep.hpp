#pragma once

// η × N sweeps over the optimizer variants in kSweepModes. Every final latent
// is scored with the oracle-weighted objective so the variants share one
// yardstick.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "oracle_noise/optimizer.hpp"
#include "oracle_noise/parallel.hpp"
#include "oracle_noise/serialization.hpp"

namespace oracle_noise {

enum class SweepMode { euclidean, spherical_oracle, spherical_uniform };

inline const char* to_string(SweepMode m) {
  switch (m) {
    case SweepMode::euclidean:
      return "euclidean";
    case SweepMode::spherical_oracle:
      return "spherical-oracle";
    case SweepMode::spherical_uniform:
      return "spherical-uniform";
  }
  return "?";
}

// Alphabetical by name, which is also the CSV row order.
inline constexpr SweepMode kSweepModes[] = {SweepMode::euclidean, SweepMode::spherical_oracle,
                                            SweepMode::spherical_uniform};

struct SweepRow {
  SweepMode mode = SweepMode::euclidean;
  double eta = 0.0;
  std::uint32_t iterations = 0;
  double final_objective = 0.0;
  double norm_drift = 0.0;  ///< |‖z_N‖ − ‖z_0‖| / ‖z_0‖
  double millis = 0.0;
};

inline std::vector<SweepRow> run_sweep(const ToyDenoiser& denoiser, const EncoderList& encoders,
                                       const TokenSequence& tokens, const Latent& z0, const OptimizerConfig& base,
                                       std::vector<double> etas, std::vector<std::uint32_t> ns,
                                       unsigned threads = configured_threads()) {
  if (etas.empty() || ns.empty()) throw InvalidArgument("sweep grids must be non-empty");
  std::sort(etas.begin(), etas.end());
  etas.erase(std::unique(etas.begin(), etas.end()), etas.end());
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (double e : etas)
    if (!std::isfinite(e) || e < 0.0) throw InvalidArgument("sweep eta values must be finite and non-negative");
  for (auto n : ns)
    if (n < 1) throw InvalidArgument("sweep iteration counts must be at least 1");

  const PromptContext scoring = prepare_prompt(encoders, tokens, TokenWeighting::oracle, base.w_min, base.w_max);
  const ObjectiveConfig score_cfg = objective_config(base, scoring.weights);
  const double r0 = sphere_radius(z0);

  std::vector<SweepRow> rows;
  for (SweepMode m : kSweepModes)
    for (double e : etas)
      for (auto n : ns) rows.push_back(SweepRow{m, e, n, 0.0, 0.0, 0.0});

  parallel_for(rows.size(), threads, [&](std::size_t i) {
    SweepRow& row = rows[i];
    OptimizerConfig cfg = base;
    cfg.eta = row.eta;
    cfg.iterations = row.iterations;
    cfg.mode = row.mode == SweepMode::euclidean ? UpdateMode::euclidean : UpdateMode::spherical;
    cfg.weighting = row.mode == SweepMode::spherical_uniform ? TokenWeighting::uniform : TokenWeighting::oracle;
    const auto start = std::chrono::steady_clock::now();
    const OptimizationResult result = optimize(denoiser, encoders, tokens, z0, cfg);
    row.final_objective = evaluate_value(denoiser, result.latent, scoring.text_c, scoring.text_null, score_cfg);
    row.norm_drift = std::abs(result.latent.norm() - r0) / r0;
    if (base.record_timing)
      row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });
  return rows;
}

inline constexpr const char* kSweepHeader = "mode,eta,iterations,final_objective,norm_drift,millis";

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << format_double(r.eta) << ',' << r.iterations << ','
        << format_double(r.final_objective) << ',' << format_double(r.norm_drift) << ',' << format_double(r.millis)
        << '\n';
  }
}

}  // namespace oracle_noise
