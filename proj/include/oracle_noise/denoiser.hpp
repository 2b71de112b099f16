#pragma once

// Frozen multi-layer cross-attention stand-in for a diffusion backbone.
//
// Per layer and spatial position p, with x_p the channel vector of z at p:
//   f = W_lift x_p                          (no bias)
//   f̂ = (f − mean f) / std f                (population std, no epsilon)
//   q = W_query f̂
//   k_j = W_key t_j                         (t_j = text embedding row j)
//   logit[p][j] = ⟨q, k_j⟩ / √d_proj
// Since nothing but linear maps precede the normalization, the logits are
// exactly invariant to z → c·z for c > 0.

#include <cmath>
#include <cstdint>
#include <vector>

#include "oracle_noise/encoding.hpp"
#include "oracle_noise/errors.hpp"
#include "oracle_noise/latent.hpp"
#include "oracle_noise/linalg.hpp"
#include "oracle_noise/random.hpp"

namespace oracle_noise {

struct DenoiserConfig {
  Shape latent_shape{4, 8, 8};
  std::uint32_t num_layers = 3;
  std::uint32_t d_model = 16;
  std::uint32_t d_proj = 8;
  std::uint32_t d_text = 16;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_layers < 1) throw InvalidArgument("denoiser: num_layers must be at least 1");
    if (d_proj < 2) throw InvalidArgument("denoiser: d_proj must be at least 2");
    if (d_model < 2) throw InvalidArgument("denoiser: d_model must be at least 2");
    if (d_text < 1) throw InvalidArgument("denoiser: d_text must be positive");
    if (latent_shape.channels < 1 || latent_shape.positions() < 1)
      throw InvalidArgument("denoiser: latent shape must have at least one channel and position");
    if (latent_shape.size() < 2) throw InvalidArgument("denoiser: latent dimension must be at least 2");
  }

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

/// Per-layer logits, each positions × tokens.
using LayerLogits = std::vector<Matrix>;

class ToyDenoiser {
 public:
  struct Layer {
    Matrix lift;   ///< d_model × channels
    Matrix query;  ///< d_proj × d_model
    Matrix key;    ///< d_proj × d_text

    friend bool operator==(const Layer&, const Layer&) = default;
  };

  /// Forward state of the query path kept for the backward pass.
  struct QueryCache {
    Matrix normalized;               ///< positions × d_model
    std::vector<double> inv_stddev;  ///< per position
    Matrix queries;                  ///< positions × d_proj
  };

  explicit ToyDenoiser(DenoiserConfig config) : config_(config) {
    config_.validate();
    layers_.reserve(config_.num_layers);
    for (std::uint32_t l = 0; l < config_.num_layers; ++l) {
      layers_.push_back(Layer{random_matrix(config_.d_model, config_.latent_shape.channels, 3 * l + 0),
                              random_matrix(config_.d_proj, config_.d_model, 3 * l + 1),
                              random_matrix(config_.d_proj, config_.d_text, 3 * l + 2)});
    }
  }

  const DenoiserConfig& config() const noexcept { return config_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  void check_latent(const Latent& z) const {
    if (z.shape() != config_.latent_shape) throw ShapeMismatch("latent shape does not match denoiser configuration");
  }

  void check_text(const TokenEmbeddingMatrix& text) const {
    if (text.dimension() != config_.d_text) throw ShapeMismatch("text embedding width does not match denoiser d_text");
    if (text.tokens() < 1) throw ShapeMismatch("text embedding has no tokens");
  }

  QueryCache queries(std::size_t layer, const Latent& z) const {
    check_latent(z);
    const Layer& w = layers_.at(layer);
    const std::size_t positions = config_.latent_shape.positions();
    const std::size_t channels = config_.latent_shape.channels;
    const std::size_t dm = config_.d_model;

    QueryCache cache{Matrix(positions, dm), std::vector<double>(positions), Matrix(positions, config_.d_proj)};
    std::vector<double> x(channels);
    std::vector<double> f(dm);
    for (std::size_t p = 0; p < positions; ++p) {
      for (std::size_t c = 0; c < channels; ++c) x[c] = z[c * positions + p];
      matvec(w.lift, x, f);
      double mean = 0.0;
      for (double v : f) mean += v;
      mean /= static_cast<double>(dm);
      double var = 0.0;
      for (double v : f) var += (v - mean) * (v - mean);
      var /= static_cast<double>(dm);
      if (var == 0.0) throw DegenerateFeatures("feature variance is zero at position " + std::to_string(p));
      const double inv = 1.0 / std::sqrt(var);
      auto out = cache.normalized.row(p);
      for (std::size_t k = 0; k < dm; ++k) out[k] = (f[k] - mean) * inv;
      cache.inv_stddev[p] = inv;
      matvec(w.query, out, cache.queries.row(p));
    }
    return cache;
  }

  /// n × d_proj key matrix for a text input.
  Matrix keys(std::size_t layer, const TokenEmbeddingMatrix& text) const {
    check_text(text);
    const Layer& w = layers_.at(layer);
    Matrix out(text.tokens(), config_.d_proj);
    for (std::size_t j = 0; j < text.tokens(); ++j) matvec(w.key, text.rows.row(j), out.row(j));
    return out;
  }

  /// logits = Q Kᵀ / √d_proj
  Matrix logits(const Matrix& queries, const Matrix& keys) const {
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.d_proj));
    Matrix out(queries.rows, keys.rows);
    for (std::size_t p = 0; p < queries.rows; ++p)
      for (std::size_t j = 0; j < keys.rows; ++j) out(p, j) = dot(queries.row(p), keys.row(j)) * scale;
    return out;
  }

  /// Accumulates ∂/∂z given ∂/∂Q (positions × d_proj) into grad_z.
  void backprop_queries(std::size_t layer, const QueryCache& cache, const Matrix& d_queries,
                        std::span<double> grad_z) const {
    const Layer& w = layers_.at(layer);
    const std::size_t positions = config_.latent_shape.positions();
    const std::size_t channels = config_.latent_shape.channels;
    const std::size_t dm = config_.d_model;
    std::vector<double> d_norm(dm);
    std::vector<double> d_feat(dm);
    std::vector<double> d_x(channels);
    for (std::size_t p = 0; p < positions; ++p) {
      std::fill(d_norm.begin(), d_norm.end(), 0.0);
      matvec_transposed_add(w.query, d_queries.row(p), d_norm);
      const auto xhat = cache.normalized.row(p);
      double mean_d = 0.0;
      double mean_dx = 0.0;
      for (std::size_t k = 0; k < dm; ++k) {
        mean_d += d_norm[k];
        mean_dx += d_norm[k] * xhat[k];
      }
      mean_d /= static_cast<double>(dm);
      mean_dx /= static_cast<double>(dm);
      for (std::size_t k = 0; k < dm; ++k)
        d_feat[k] = cache.inv_stddev[p] * (d_norm[k] - mean_d - xhat[k] * mean_dx);
      std::fill(d_x.begin(), d_x.end(), 0.0);
      matvec_transposed_add(w.lift, d_feat, d_x);
      for (std::size_t c = 0; c < channels; ++c) grad_z[c * positions + p] += d_x[c];
    }
  }

 private:
  Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t stream) const {
    Matrix m(rows, cols);
    NormalSampler sampler(mix_seed(config_.seed, stream));
    sampler.fill(m.data);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& v : m.data) v *= scale;
    return m;
  }

  DenoiserConfig config_;
  std::vector<Layer> layers_;
};

/// Pre-softmax cross-attention logits of every layer.
inline LayerLogits forward_logits(const ToyDenoiser& denoiser, const Latent& z, const TokenEmbeddingMatrix& text) {
  LayerLogits out;
  out.reserve(denoiser.num_layers());
  for (std::size_t l = 0; l < denoiser.num_layers(); ++l) {
    const auto cache = denoiser.queries(l, z);
    out.push_back(denoiser.logits(cache.queries, denoiser.keys(l, text)));
  }
  return out;
}

}  // namespace oracle_noise
