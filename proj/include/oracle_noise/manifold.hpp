#pragma once

// Exact geometry of the sphere of radius ‖z‖ through a latent z.

#include <cmath>
#include <vector>

#include "oracle_noise/errors.hpp"
#include "oracle_noise/latent.hpp"
#include "oracle_noise/linalg.hpp"

namespace oracle_noise {

/// Relative size below which a tangent gradient is treated as zero.
inline constexpr double kDegenerateGradientRatio = 1e-12;

class TangentVector;
TangentVector project_to_tangent(const Latent& z, const Latent& g);

/// A vector in the tangent space of the sphere at some base latent. Only
/// project_to_tangent creates one from scratch.
class TangentVector {
 public:
  std::span<const double> values() const noexcept { return values_; }
  double base_norm() const noexcept { return base_norm_; }
  double norm() const noexcept { return oracle_noise::norm(values_); }
  std::size_t size() const noexcept { return values_.size(); }

  TangentVector scaled(double factor) const {
    TangentVector out = *this;
    for (double& v : out.values_) v *= factor;
    return out;
  }

 private:
  TangentVector(std::vector<double> values, double base_norm) : values_(std::move(values)), base_norm_(base_norm) {}
  friend TangentVector project_to_tangent(const Latent& z, const Latent& g);

  std::vector<double> values_;
  double base_norm_;
};

inline double sphere_radius(const Latent& z) {
  const double r = z.norm();
  if (r == 0.0) throw ZeroLatent("latent has zero norm");
  return r;
}

/// g − (⟨z,g⟩/‖z‖²)·z
inline TangentVector project_to_tangent(const Latent& z, const Latent& g) {
  if (z.size() != g.size()) throw ShapeMismatch("project_to_tangent: dimension mismatch");
  const double r = sphere_radius(z);
  const double coeff = dot(z.values(), g.values()) / (r * r);
  std::vector<double> out(g.values().begin(), g.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= coeff * z[i];
  return TangentVector(std::move(out), r);
}

/// Moves z by angle eta along the great circle towards g_perp:
/// z·cos η + ‖z‖·(g⊥/‖g⊥‖)·sin η.
inline Latent geodesic_step(const Latent& z, const TangentVector& g_perp, double eta) {
  if (z.size() != g_perp.size()) throw ShapeMismatch("geodesic_step: dimension mismatch");
  if (!std::isfinite(eta)) throw InvalidArgument("geodesic_step: eta must be finite");
  const double r = sphere_radius(z);
  const double gn = g_perp.norm();
  if (gn <= kDegenerateGradientRatio * r) throw DegenerateGradient("tangent gradient vanished (stationary point)");
  const double c = std::cos(eta);
  const double s = r * std::sin(eta) / gn;
  const auto g = g_perp.values();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = z[i] * c + g[i] * s;
  return Latent(z.shape(), std::move(out));
}

/// Riemannian exponential map with arc-length parameterization: the point at
/// distance ‖v‖ along the geodesic leaving z with direction v.
inline Latent exponential_map(const Latent& z, const TangentVector& v) {
  if (z.size() != v.size()) throw ShapeMismatch("exponential_map: dimension mismatch");
  const double r = sphere_radius(z);
  const double arc = v.norm();
  if (arc == 0.0) return z;
  const double angle = arc / r;
  const double c = std::cos(angle);
  const double s = r * std::sin(angle) / arc;
  const auto dir = v.values();
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = z[i] * c + dir[i] * s;
  return Latent(z.shape(), std::move(out));
}

}  // namespace oracle_noise
