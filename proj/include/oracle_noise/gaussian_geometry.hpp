#pragma once

// Monte Carlo and closed-form checks of high-dimensional Gaussian geometry:
// shell concentration of ‖z‖, the chi mean, the radial transport cost to the
// uniform sphere law, and norm growth under a Euclidean step.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "oracle_noise/errors.hpp"
#include "oracle_noise/latent.hpp"
#include "oracle_noise/parallel.hpp"
#include "oracle_noise/random.hpp"

namespace oracle_noise {

inline Latent sample_standard_gaussian(Shape shape, std::uint64_t seed) {
  if (shape.size() < 2) throw InvalidLatent("latent dimension must be at least 2");
  std::vector<double> values(shape.size());
  NormalSampler sampler(seed);
  sampler.fill(values);
  return Latent(shape, std::move(values));
}

struct AnnulusReport {
  std::uint64_t dimension = 0;
  std::uint64_t samples = 0;
  double epsilon = 0.0;
  double fraction_outside = 0.0;
  double mean_normalized_radius = 0.0;
  double std_normalized_radius = 0.0;
};

struct TransportReport {
  std::uint64_t dimension = 0;
  std::uint64_t samples = 0;
  double mc_cost = 0.0;
  double analytic_cost = 0.0;
  double analytic_mean_norm = 0.0;
};

namespace detail {

/// ‖z‖ for M independent N(0, I_D) draws; draw i uses seed mix_seed(seed, i).
inline std::vector<double> sample_radii(std::uint64_t dimension, std::uint64_t samples, std::uint64_t seed) {
  std::vector<double> radii(samples);
  parallel_for(samples, configured_threads(), [&](std::size_t i) {
    NormalSampler sampler(mix_seed(seed, i));
    double sq = 0.0;
    for (std::uint64_t k = 0; k < dimension; ++k) {
      const double v = sampler();
      sq += v * v;
    }
    radii[i] = std::sqrt(sq);
  });
  return radii;
}

}  // namespace detail

inline AnnulusReport annulus_stats(std::uint64_t dimension, std::uint64_t samples, double epsilon,
                                   std::uint64_t seed) {
  if (dimension < 2) throw InvalidArgument("annulus_stats: D must be at least 2");
  if (samples < 1) throw InvalidArgument("annulus_stats: M must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("annulus_stats: epsilon must lie in (0, 1)");

  const auto radii = detail::sample_radii(dimension, samples, seed);
  const double root_d = std::sqrt(static_cast<double>(dimension));
  std::uint64_t outside = 0;
  double sum = 0.0;
  for (double r : radii) {
    const double t = r / root_d;
    if (std::abs(t - 1.0) >= epsilon) ++outside;
    sum += t;
  }
  const double mean = sum / static_cast<double>(samples);
  double ss = 0.0;
  for (double r : radii) {
    const double d = r / root_d - mean;
    ss += d * d;
  }
  AnnulusReport report;
  report.dimension = dimension;
  report.samples = samples;
  report.epsilon = epsilon;
  report.fraction_outside = static_cast<double>(outside) / static_cast<double>(samples);
  report.mean_normalized_radius = mean;
  report.std_normalized_radius = samples > 1 ? std::sqrt(ss / static_cast<double>(samples - 1)) : 0.0;
  return report;
}

/// E[‖z‖] for z ~ N(0, I_D): √2·Γ((D+1)/2)/Γ(D/2). Small D uses lgamma;
/// large D uses the asymptotic series of Γ(x+½)/Γ(x), since the lgamma
/// difference cancels badly there (truncation error below 1e-17 for x ≥ 1000).
inline double expected_chi_norm(std::uint64_t dimension) {
  if (dimension < 1) throw InvalidArgument("expected_chi_norm: D must be positive");
  const double x = 0.5 * static_cast<double>(dimension);
  if (x < 1000.0) return std::sqrt(2.0) * std::exp(std::lgamma(x + 0.5) - std::lgamma(x));
  const double inv = 1.0 / x;
  const double series = 1.0 + inv * (-1.0 / 8 + inv * (1.0 / 128 + inv * (5.0 / 1024 - inv * (21.0 / 32768))));
  return std::sqrt(2.0 * x) * series;
}

/// Transport cost E[(‖z‖ − √D)²] of the radial map onto the √D-sphere.
inline TransportReport transport_cost(std::uint64_t dimension, std::uint64_t samples, std::uint64_t seed) {
  if (dimension < 2) throw InvalidArgument("transport_cost: D must be at least 2");
  if (samples < 100) throw InvalidArgument("transport_cost: M must be at least 100");

  const double d = static_cast<double>(dimension);
  const double root_d = std::sqrt(d);
  const auto radii = detail::sample_radii(dimension, samples, seed);
  double acc = 0.0;
  for (double r : radii) acc += (r - root_d) * (r - root_d);

  TransportReport report;
  report.dimension = dimension;
  report.samples = samples;
  report.mc_cost = acc / static_cast<double>(samples);
  report.analytic_mean_norm = expected_chi_norm(dimension);
  report.analytic_cost = std::max(0.0, 2.0 * d - 2.0 * root_d * report.analytic_mean_norm);
  return report;
}

struct NormExpansion {
  double new_norm_sq = 0.0;  ///< ‖z + ηg‖² computed from the updated vector
  double predicted = 0.0;    ///< ‖z‖² + 2η⟨z,g⟩ + η²‖g‖²
};

inline NormExpansion euclidean_norm_expansion(const Latent& z, const Latent& g, double eta) {
  if (z.size() != g.size()) throw ShapeMismatch("euclidean_norm_expansion: dimension mismatch");
  if (!std::isfinite(eta)) throw InvalidArgument("euclidean_norm_expansion: eta must be finite");
  const Latent moved = axpy(z, eta, g.values());
  const double zz = dot(z.values(), z.values());
  const double zg = dot(z.values(), g.values());
  const double gg = dot(g.values(), g.values());
  return {dot(moved.values(), moved.values()), zz + 2.0 * eta * zg + eta * eta * gg};
}

}  // namespace oracle_noise
