#pragma once

// JSON and CSV encodings of the library's records. Floats in CSV use
// std::to_chars with 17 significant digits, independent of locale.

#include <charconv>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oracle_noise/denoiser.hpp"
#include "oracle_noise/encoding.hpp"
#include "oracle_noise/gaussian_geometry.hpp"
#include "oracle_noise/objective.hpp"
#include "oracle_noise/optimizer.hpp"

namespace oracle_noise {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline json to_json(const AnnulusReport& r) {
  return {{"dimension", r.dimension},
          {"samples", r.samples},
          {"epsilon", r.epsilon},
          {"fraction_outside", r.fraction_outside},
          {"mean_normalized_radius", r.mean_normalized_radius},
          {"std_normalized_radius", r.std_normalized_radius}};
}

inline json to_json(const TransportReport& r) {
  return {{"dimension", r.dimension},
          {"samples", r.samples},
          {"mc_cost", r.mc_cost},
          {"analytic_cost", r.analytic_cost},
          {"analytic_mean_norm", r.analytic_mean_norm}};
}

inline json to_json(const TokenSequence& t) {
  json mask = json::array();
  for (bool b : t.special_mask) mask.push_back(b);
  return {{"ids", t.ids}, {"special_mask", mask}, {"pad_id", t.pad_id}};
}

/// WeightVector serializes as a bare array.
inline json to_json(const WeightVector& w) { return json(w.weights); }

inline json to_json(const ObjectiveResult& r) {
  return {{"value", r.value}, {"per_layer_values", r.per_layer_values}};
}

inline json to_json(const OvershootReport& r) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"eta_grid", r.eta_grid},
          {"single_step_gains", r.single_step_gains},
          {"empirical_peak_eta", r.empirical_peak_eta},
          {"predicted_threshold", finite_or_null(r.predicted_threshold)},
          {"curvature_uHu", r.curvature_uHu},
          {"directional_gain", r.directional_gain}};
}

inline json to_json(const DenoiserConfig& c) {
  return {{"channels", c.latent_shape.channels},
          {"height", c.latent_shape.height},
          {"width", c.latent_shape.width},
          {"num_layers", c.num_layers},
          {"d_model", c.d_model},
          {"d_proj", c.d_proj},
          {"seed", c.seed}};
}

inline constexpr const char* kTrajectoryHeader = "iter,objective,norm,grad_norm,tangent_grad_norm,radial_cosine,millis";

inline void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << kTrajectoryHeader << '\n';
  for (const auto& r : t.rows) {
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.norm) << ','
        << format_double(r.grad_norm) << ',' << format_double(r.tangent_grad_norm) << ','
        << format_double(r.radial_cosine) << ',' << format_double(r.millis) << '\n';
  }
}

inline std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream out;
  write_trajectory_csv(out, t);
  return out.str();
}

}  // namespace oracle_noise
