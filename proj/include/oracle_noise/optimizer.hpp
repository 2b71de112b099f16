#pragma once

// Two-stage noise optimization: token weights from representational collapse,
// then gradient ascent on the guidance-aware attention objective. Spherical
// mode moves along great circles (norm preserved); Euclidean mode is the
// unconstrained z ← z + ηg baseline.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "oracle_noise/denoiser.hpp"
#include "oracle_noise/encoding.hpp"
#include "oracle_noise/errors.hpp"
#include "oracle_noise/latent.hpp"
#include "oracle_noise/manifold.hpp"
#include "oracle_noise/objective.hpp"

namespace oracle_noise {

enum class UpdateMode { spherical, euclidean };
enum class TokenWeighting { oracle, uniform };

struct OptimizerConfig {
  double eta = 0.005;
  std::uint32_t iterations = 10;
  UpdateMode mode = UpdateMode::spherical;
  TokenWeighting weighting = TokenWeighting::oracle;
  double guidance_scale = kDefaultGuidanceScale;
  double w_min = 0.5;
  double w_max = 3.0;
  std::vector<double> layer_weights = kDefaultLayerWeights;
  std::uint64_t seed = 0;
  std::uint32_t max_timestep = 999;  // recorded only; the toy denoiser is time independent
  bool record_timing = false;

  void validate() const {
    if (!std::isfinite(eta)) throw InvalidArgument("eta must be finite");
    if (iterations < 1) throw InvalidArgument("iterations must be at least 1");
    if (!(w_min < w_max)) throw InvalidBounds("weight bounds require w_min < w_max");
    for (double a : layer_weights)
      if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("layer weights must be positive");
    if (!std::isfinite(guidance_scale)) throw InvalidArgument("guidance scale must be finite");
  }
};

struct TrajectoryRow {
  std::uint32_t iter = 0;
  double objective = 0.0;
  double norm = 0.0;
  double grad_norm = 0.0;
  double tangent_grad_norm = 0.0;
  double radial_cosine = 0.0;  ///< ⟨z,g⟩ / (‖z‖‖g‖)
  double millis = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  bool stopped_at_stationary_point = false;
};

struct OptimizationResult {
  Latent latent;
  WeightVector weights;
  Trajectory trajectory;
  double final_objective = 0.0;
};

/// Prompt-side inputs shared by every objective evaluation.
struct PromptContext {
  WeightVector weights;
  TokenEmbeddingMatrix text_c;
  TokenEmbeddingMatrix text_null;
};

/// Step 1: token weights, plus conditional and null text embeddings from the
/// first encoder.
inline PromptContext prepare_prompt(const EncoderList& encoders, const TokenSequence& tokens, TokenWeighting weighting,
                                    double w_min, double w_max) {
  tokens.validate();
  if (encoders.empty()) throw InvalidArgument("at least one encoder is required");
  if (tokens.valid_indices().empty()) throw EmptyValidSet("prompt has no valid (non-special) tokens");
  WeightVector weights = weighting == TokenWeighting::oracle
                             ? affine_normalize(impact_scores(tokens, encoders), w_min, w_max)
                             : uniform_weights(tokens, 1.0);
  const TextEncoder& primary = *encoders.front();
  return {std::move(weights), primary.encode_tokens(tokens),
          primary.encode_tokens(TokenSequence::null_prompt(tokens.size(), tokens.pad_id))};
}

inline ObjectiveConfig objective_config(const OptimizerConfig& cfg, WeightVector weights) {
  return {cfg.guidance_scale, cfg.layer_weights, std::move(weights)};
}

inline OptimizationResult optimize(const ToyDenoiser& denoiser, const EncoderList& encoders,
                                   const TokenSequence& tokens, const Latent& z0, const OptimizerConfig& cfg) {
  cfg.validate();
  denoiser.check_latent(z0);
  sphere_radius(z0);
  PromptContext prompt = prepare_prompt(encoders, tokens, cfg.weighting, cfg.w_min, cfg.w_max);
  const ObjectiveConfig objective = objective_config(cfg, prompt.weights);

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  Latent z = z0;
  Trajectory trajectory;
  trajectory.rows.reserve(cfg.iterations);
  for (std::uint32_t i = 1; i <= cfg.iterations; ++i) {
    const ObjectiveResult eval = evaluate(denoiser, z, prompt.text_c, prompt.text_null, objective);
    const double radius = z.norm();
    const double grad_norm = eval.gradient.norm();
    const TangentVector g_perp = project_to_tangent(z, eval.gradient);

    TrajectoryRow row;
    row.iter = i;
    row.objective = eval.value;
    row.norm = radius;
    row.grad_norm = grad_norm;
    row.tangent_grad_norm = g_perp.norm();
    row.radial_cosine = grad_norm > 0.0 ? dot(z.values(), eval.gradient.values()) / (radius * grad_norm) : 0.0;

    const bool stationary = (cfg.mode == UpdateMode::spherical ? row.tangent_grad_norm : grad_norm) <=
                            kDegenerateGradientRatio * radius;
    if (!stationary) {
      z = cfg.mode == UpdateMode::spherical ? geodesic_step(z, g_perp, cfg.eta)
                                            : axpy(z, cfg.eta, eval.gradient.values());
    }
    if (cfg.record_timing)
      row.millis = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    trajectory.rows.push_back(row);
    if (stationary) {
      trajectory.stopped_at_stationary_point = true;
      break;
    }
  }
  const double final_value = evaluate_value(denoiser, z, prompt.text_c, prompt.text_null, objective);
  return {std::move(z), std::move(prompt.weights), std::move(trajectory), final_value};
}

/// Full two-stage method with geodesic updates.
inline OptimizationResult oracle_optimize(const ToyDenoiser& denoiser, const EncoderList& encoders,
                                          const TokenSequence& tokens, const Latent& z0, OptimizerConfig cfg) {
  cfg.mode = UpdateMode::spherical;
  return optimize(denoiser, encoders, tokens, z0, cfg);
}

/// Same objective with unconstrained z ← z + ηg updates.
inline OptimizationResult euclidean_optimize(const ToyDenoiser& denoiser, const EncoderList& encoders,
                                             const TokenSequence& tokens, const Latent& z0, OptimizerConfig cfg) {
  cfg.mode = UpdateMode::euclidean;
  return optimize(denoiser, encoders, tokens, z0, cfg);
}

// ---------------------------------------------------------------------------
// Geodesic overshoot

/// Objective as a pair of callables, so the diagnostic can run on test
/// functions as well as the attention objective.
struct ScalarField {
  std::function<double(const Latent&)> value;
  std::function<Latent(const Latent&)> gradient;
};

struct OvershootReport {
  std::vector<double> eta_grid;
  std::vector<double> single_step_gains;
  double empirical_peak_eta = 0.0;
  double predicted_threshold = 0.0;  ///< −2⟨g,u⟩/(uᵀHu); +∞ when curvature ≥ 0
  double curvature_uHu = 0.0;
  double directional_gain = 0.0;  ///< ⟨g,u⟩
};

inline constexpr double kCurvatureStep = 1e-3;

/// Single-step gains L(γ(η)) − L(z0) along the ascent geodesic, with
/// u = ‖z0‖·g⊥/‖g⊥‖ and curvature from a symmetric second difference of
/// L(γ(·)) at 0.
inline OvershootReport overshoot_diagnostic(const ScalarField& field, const Latent& z0,
                                            std::span<const double> eta_grid, double h = kCurvatureStep) {
  if (eta_grid.empty()) throw InvalidArgument("overshoot: eta grid is empty");
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    if (!(eta_grid[i] > 0.0)) throw InvalidArgument("overshoot: eta grid must be positive");
    if (i > 0 && !(eta_grid[i] > eta_grid[i - 1])) throw InvalidArgument("overshoot: eta grid must increase strictly");
  }
  const double base = field.value(z0);
  const Latent g = field.gradient(z0);
  const TangentVector g_perp = project_to_tangent(z0, g);
  const double radius = sphere_radius(z0);
  if (g_perp.norm() <= kDegenerateGradientRatio * radius) throw DegenerateGradient("overshoot: stationary point");

  OvershootReport report;
  report.eta_grid.assign(eta_grid.begin(), eta_grid.end());
  report.single_step_gains.reserve(eta_grid.size());
  double best = -std::numeric_limits<double>::infinity();
  for (double eta : eta_grid) {
    const double gain = field.value(geodesic_step(z0, g_perp, eta)) - base;
    report.single_step_gains.push_back(gain);
    if (gain > best) {
      best = gain;
      report.empirical_peak_eta = eta;
    }
  }

  const double up = field.value(geodesic_step(z0, g_perp, h));
  const double down = field.value(geodesic_step(z0, g_perp, -h));
  report.curvature_uHu = (up - 2.0 * base + down) / (h * h);
  report.directional_gain = radius * dot(g.values(), g_perp.values()) / g_perp.norm();
  report.predicted_threshold = report.curvature_uHu < 0.0 ? -2.0 * report.directional_gain / report.curvature_uHu
                                                          : std::numeric_limits<double>::infinity();
  return report;
}

inline ScalarField attention_field(const ToyDenoiser& denoiser, const PromptContext& prompt, ObjectiveConfig cfg) {
  auto shared = std::make_shared<const std::pair<PromptContext, ObjectiveConfig>>(prompt, std::move(cfg));
  const ToyDenoiser* den = &denoiser;
  return {[den, shared](const Latent& z) {
            return evaluate_value(*den, z, shared->first.text_c, shared->first.text_null, shared->second);
          },
          [den, shared](const Latent& z) {
            return evaluate(*den, z, shared->first.text_c, shared->first.text_null, shared->second).gradient;
          }};
}

inline OvershootReport overshoot_diagnostic(const ToyDenoiser& denoiser, const EncoderList& encoders,
                                            const TokenSequence& tokens, const Latent& z0,
                                            std::span<const double> eta_grid, double s,
                                            const std::vector<double>& layer_weights, double w_min, double w_max) {
  const PromptContext prompt = prepare_prompt(encoders, tokens, TokenWeighting::oracle, w_min, w_max);
  return overshoot_diagnostic(attention_field(denoiser, prompt, {s, layer_weights, prompt.weights}), z0, eta_grid);
}

/// 0.005, 0.010, ..., up to and including `last`.
inline std::vector<double> default_overshoot_grid(double step = 0.005, double last = 3.5) {
  std::vector<double> grid;
  for (int k = 1; k * step <= last + 1e-12; ++k) grid.push_back(k * step);
  return grid;
}

}  // namespace oracle_noise
