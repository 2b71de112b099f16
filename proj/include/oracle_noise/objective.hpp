#pragma once

// Guidance-aware attention objective
//
//   L(z) = Σ_l α_l Σ_p Σ_j softmax_j(L∅ + s·(Lc − L∅))[p][j] · M_j
//
// with its exact reverse-mode gradient. Both the conditional and the
// unconditional forward passes depend on z, and the gradient flows through
// both.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "oracle_noise/denoiser.hpp"
#include "oracle_noise/encoding.hpp"
#include "oracle_noise/errors.hpp"
#include "oracle_noise/latent.hpp"

namespace oracle_noise {

inline const std::vector<double> kDefaultLayerWeights{1.0, 1.5, 2.0};
inline constexpr double kDefaultGuidanceScale = 7.5;

struct ObjectiveConfig {
  double guidance_scale = kDefaultGuidanceScale;
  std::vector<double> layer_weights = kDefaultLayerWeights;
  WeightVector token_weights;
};

struct ObjectiveResult {
  double value = 0.0;
  Latent gradient;
  std::vector<double> per_layer_values;
};

/// L∅ + s·(Lc − L∅), entrywise. s = 1 returns Lc exactly.
inline Matrix cfg_logits(const Matrix& cond, const Matrix& null, double s) {
  if (cond.rows != null.rows || cond.cols != null.cols) throw ShapeMismatch("cfg_logits: logit shapes differ");
  if (s == 1.0) return cond;
  Matrix out(cond.rows, cond.cols);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = null.data[i] + s * (cond.data[i] - null.data[i]);
  return out;
}

inline LayerLogits cfg_logits(const LayerLogits& cond, const LayerLogits& null, double s) {
  if (cond.size() != null.size()) throw ShapeMismatch("cfg_logits: layer counts differ");
  LayerLogits out;
  out.reserve(cond.size());
  for (std::size_t l = 0; l < cond.size(); ++l) out.push_back(cfg_logits(cond[l], null[l], s));
  return out;
}

/// Row-wise softmax with max subtraction.
inline Matrix attention_map(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t p = 0; p < logits.rows; ++p) {
    const auto in = logits.row(p);
    auto row = out.row(p);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      row[j] = std::exp(in[j] - mx);
      sum += row[j];
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

namespace detail {

inline void check_objective_inputs(const ToyDenoiser& denoiser, const TokenEmbeddingMatrix& text_c,
                                   const TokenEmbeddingMatrix* text_null, const ObjectiveConfig& cfg) {
  if (cfg.layer_weights.size() != denoiser.num_layers())
    throw ShapeMismatch("layer weight count does not match denoiser layers");
  if (cfg.token_weights.size() != text_c.tokens()) throw ShapeMismatch("token weight count does not match prompt");
  if (text_null && text_null->tokens() != text_c.tokens())
    throw ShapeMismatch("null prompt length differs from prompt length");
}

/// Σ_p Σ_j A[p][j]·M_j and, optionally, its derivative w.r.t. the logits
/// (scaled by alpha): α·A[p][j]·(M_j − Σ_k A[p][k] M_k).
inline double weighted_mass(const Matrix& attention, std::span<const double> weights, double alpha,
                            Matrix* d_logits) {
  double total = 0.0;
  for (std::size_t p = 0; p < attention.rows; ++p) {
    const auto a = attention.row(p);
    const double row_mass = dot(a, weights);
    total += row_mass;
    if (d_logits) {
      auto d = d_logits->row(p);
      for (std::size_t j = 0; j < a.size(); ++j) d[j] = alpha * a[j] * (weights[j] - row_mass);
    }
  }
  return total;
}

}  // namespace detail

inline ObjectiveResult evaluate(const ToyDenoiser& denoiser, const Latent& z, const TokenEmbeddingMatrix& text_c,
                                const TokenEmbeddingMatrix& text_null, const ObjectiveConfig& cfg,
                                bool with_gradient = true) {
  detail::check_objective_inputs(denoiser, text_c, &text_null, cfg);
  denoiser.check_latent(z);
  const double s = cfg.guidance_scale;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(denoiser.config().d_proj));

  ObjectiveResult result{0.0, Latent::zeros(z.shape()), std::vector<double>(denoiser.num_layers(), 0.0)};
  for (std::size_t l = 0; l < denoiser.num_layers(); ++l) {
    const auto cache = denoiser.queries(l, z);
    const Matrix keys_c = denoiser.keys(l, text_c);
    const Matrix keys_null = denoiser.keys(l, text_null);
    const Matrix logits_c = denoiser.logits(cache.queries, keys_c);
    const Matrix logits_null = denoiser.logits(cache.queries, keys_null);
    const Matrix attention = attention_map(cfg_logits(logits_c, logits_null, s));

    const double alpha = cfg.layer_weights[l];
    Matrix d_mixed(attention.rows, attention.cols);
    const double mass = detail::weighted_mass(attention, cfg.token_weights.weights, alpha,
                                              with_gradient ? &d_mixed : nullptr);
    result.per_layer_values[l] = alpha * mass;
    result.value += alpha * mass;
    if (!with_gradient) continue;

    // ∂mixed/∂Lc = s, ∂mixed/∂L∅ = 1 − s; both logit maps share the queries.
    Matrix d_queries(cache.queries.rows, cache.queries.cols);
    for (std::size_t p = 0; p < d_queries.rows; ++p) {
      auto dq = d_queries.row(p);
      const auto dm = d_mixed.row(p);
      for (std::size_t j = 0; j < dm.size(); ++j) {
        const double dc = s * dm[j] * inv_sqrt_d;
        const double dn = (1.0 - s) * dm[j] * inv_sqrt_d;
        const auto kc = keys_c.row(j);
        const auto kn = keys_null.row(j);
        for (std::size_t k = 0; k < dq.size(); ++k) dq[k] += dc * kc[k] + dn * kn[k];
      }
    }
    denoiser.backprop_queries(l, cache, d_queries, result.gradient.values());
  }
  return result;
}

inline double evaluate_value(const ToyDenoiser& denoiser, const Latent& z, const TokenEmbeddingMatrix& text_c,
                             const TokenEmbeddingMatrix& text_null, const ObjectiveConfig& cfg) {
  return evaluate(denoiser, z, text_c, text_null, cfg, false).value;
}

/// Objective from the conditional pass alone (no guidance extrapolation).
inline double evaluate_conditional_only(const ToyDenoiser& denoiser, const Latent& z,
                                        const TokenEmbeddingMatrix& text_c, const ObjectiveConfig& cfg) {
  detail::check_objective_inputs(denoiser, text_c, nullptr, cfg);
  const LayerLogits logits = forward_logits(denoiser, z, text_c);
  double value = 0.0;
  for (std::size_t l = 0; l < logits.size(); ++l)
    value += cfg.layer_weights[l] *
             detail::weighted_mass(attention_map(logits[l]), cfg.token_weights.weights, 1.0, nullptr);
  return value;
}

/// Central differences (f(z + h e_i) − f(z − h e_i)) / 2h at the given coordinates.
inline std::vector<double> finite_difference_gradient(const std::function<double(const Latent&)>& f, const Latent& z,
                                                      double h, std::span<const std::size_t> coords) {
  if (!(h > 0.0)) throw InvalidArgument("finite_difference_gradient: h must be positive");
  std::vector<double> out;
  out.reserve(coords.size());
  Latent probe = z;
  for (std::size_t i : coords) {
    if (i >= z.size()) throw InvalidIndex("finite_difference_gradient: coordinate out of range");
    probe[i] = z[i] + h;
    const double up = f(probe);
    probe[i] = z[i] - h;
    const double down = f(probe);
    probe[i] = z[i];
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

inline std::vector<double> finite_difference_gradient(const ToyDenoiser& denoiser, const Latent& z,
                                                      const TokenEmbeddingMatrix& text_c,
                                                      const TokenEmbeddingMatrix& text_null,
                                                      const ObjectiveConfig& cfg, double h,
                                                      std::span<const std::size_t> coords) {
  return finite_difference_gradient(
      [&](const Latent& x) { return evaluate_value(denoiser, x, text_c, text_null, cfg); }, z, h, coords);
}

}  // namespace oracle_noise
