#pragma once

// Acceptance criteria as runnable checks. A criterion that passes its
// numeric check but exceeds its runtime budget still fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle_noise/commands.hpp"
#include "oracle_noise/fixtures.hpp"
#include "oracle_noise/gaussian_geometry.hpp"
#include "oracle_noise/manifold.hpp"
#include "oracle_noise/objective.hpp"
#include "oracle_noise/optimizer.hpp"
#include "oracle_noise/sweep.hpp"

namespace oracle_noise::verify {

struct Options {
  /// Mutation hook: when set, the tangent stage returns the raw gradient.
  bool skip_tangent_projection = false;
  /// Scratch space for criteria that write files.
  std::filesystem::path scratch_dir = "oracle_noise_verify";
};

struct Check {
  bool passed = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;
};

struct Criterion {
  int id;
  std::string name;
  std::string suite;
  double limit_seconds;
  std::function<Check(const Options&)> run;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

inline double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

inline std::vector<double> tangent_stage(const Latent& z, const Latent& g, const Options& opts) {
  if (opts.skip_tangent_projection) return {g.values().begin(), g.values().end()};
  const auto t = project_to_tangent(z, g);
  return {t.values().begin(), t.values().end()};
}

/// Random prompt: BOS, 3–8 content tokens, EOS, PAD to length 12.
inline TokenSequence random_prompt(NormalSampler& rng, std::uint32_t vocab) {
  const std::size_t words = 3 + rng.bits() % 6;
  TokenSequence t;
  t.pad_id = 0;
  t.ids.push_back(1);
  t.special_mask.push_back(true);
  for (std::size_t i = 0; i < words; ++i) {
    t.ids.push_back(static_cast<std::uint32_t>(3 + rng.bits() % (vocab - 3)));
    t.special_mask.push_back(false);
  }
  t.ids.push_back(2);
  t.special_mask.push_back(true);
  while (t.ids.size() < 12) {
    t.ids.push_back(0);
    t.special_mask.push_back(true);
  }
  return t;
}

}  // namespace detail

// 1
inline Check norm_preservation(const Options&) {
  const Fixture fx = make_fixture(64);
  OptimizerConfig cfg;
  cfg.eta = 0.05;
  cfg.iterations = 10;
  const auto result = oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg);
  const double r0 = fx.z0.norm();
  const double drift = std::abs(result.latent.norm() - r0) / r0;
  return {drift <= 1e-10 && result.trajectory.rows.size() == 10,
          "D=16384 eta=0.05 N=10 relative drift " + detail::fmt(drift) + " (bound 1e-10)"};
}

// 2
inline Check euclidean_inflation(const Options&) {
  const Fixture fx = make_fixture(64);
  OptimizerConfig cfg;
  cfg.eta = 0.05;
  cfg.iterations = 10;
  const auto result = euclidean_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg);
  const auto& rows = result.trajectory.rows;
  double grad_sq = 0.0;
  bool strictly_increasing = rows.size() == 10;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    grad_sq += rows[k].grad_norm * rows[k].grad_norm;
    const double next = k + 1 < rows.size() ? rows[k + 1].norm : result.latent.norm();
    strictly_increasing = strictly_increasing && next > rows[k].norm;
  }
  const double r0 = fx.z0.norm();
  const double rn = result.latent.norm();
  const double growth = rn * rn - r0 * r0;
  const double bound = 0.999 * cfg.eta * cfg.eta * grad_sq;
  return {growth >= bound && strictly_increasing,
          "norm^2 growth " + detail::fmt(growth) + " vs 0.999*eta^2*sum|g|^2 " + detail::fmt(bound) +
              (strictly_increasing ? ", norm strictly increasing" : ", norm NOT strictly increasing")};
}

// 3
inline Check gradient_orthogonality(const Options& opts) {
  double worst_gradient = 0.0;
  double worst_tangent = 0.0;
  NormalSampler rng(0x0A7);
  for (std::uint64_t i = 0; i < 100; ++i) {
    DenoiserConfig dc;
    dc.seed = mix_seed(0xD0, i);
    const ToyDenoiser denoiser(dc);
    const EncoderList encoders = fixture_encoders(mix_seed(0xE0, i) % 100000);
    const TokenSequence tokens = detail::random_prompt(rng, kFixtureVocab);
    const Latent z = sample_standard_gaussian(dc.latent_shape, mix_seed(0x20, i));
    const PromptContext prompt = prepare_prompt(encoders, tokens, TokenWeighting::oracle, 0.5, 3.0);
    const ObjectiveConfig cfg{kDefaultGuidanceScale, kDefaultLayerWeights, prompt.weights};
    const Latent g = evaluate(denoiser, z, prompt.text_c, prompt.text_null, cfg).gradient;
    const double zn = z.norm();
    const double gn = g.norm();
    worst_gradient = std::max(worst_gradient, std::abs(dot(z.values(), g.values())) / (zn * gn));

    // The tangent stage must also remove a radial residual.
    const Latent contaminated = axpy(g, gn / zn, z.values());
    const auto t = detail::tangent_stage(z, contaminated, opts);
    worst_tangent = std::max(worst_tangent, std::abs(dot(z.values(), t)) / (zn * norm(t)));
  }
  return {worst_gradient <= 1e-8 && worst_tangent <= 1e-8,
          "100 instances D=256: max |<z,g>|/(|z||g|) " + detail::fmt(worst_gradient) +
              ", max tangent-stage radial cosine " + detail::fmt(worst_tangent) + " (bound 1e-8)"};
}

// 4
inline Check finite_difference_agreement(const Options&) {
  const Fixture fx = make_fixture(8);
  const PromptContext prompt = prepare_prompt(fx.encoders, fx.tokens, TokenWeighting::oracle, 0.5, 3.0);
  const ObjectiveConfig cfg{kDefaultGuidanceScale, kDefaultLayerWeights, prompt.weights};
  const Latent g = evaluate(fx.denoiser, fx.z0, prompt.text_c, prompt.text_null, cfg).gradient;

  NormalSampler rng(0xFD);
  std::vector<std::size_t> coords;
  while (coords.size() < 50) {
    const std::size_t c = rng.bits() % fx.z0.size();
    if (std::find(coords.begin(), coords.end(), c) == coords.end()) coords.push_back(c);
  }
  const double h = 1e-5 * fx.z0.norm() / std::sqrt(static_cast<double>(fx.z0.size()));
  const auto fd = finite_difference_gradient(fx.denoiser, fx.z0, prompt.text_c, prompt.text_null, cfg, h, coords);
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const double a = g[coords[k]];
    if (std::abs(a) < 1e-12 && std::abs(fd[k]) < 1e-12) continue;
    worst = std::max(worst, detail::relative(a, fd[k]));
    ++compared;
  }
  return {worst <= 1e-5 && compared > 0, std::to_string(compared) + " coordinates, max relative error " +
                                             detail::fmt(worst) + " (bound 1e-5)"};
}

// 5
inline Check gaussian_annulus(const Options&) {
  const auto high = annulus_stats(16384, 2000, 0.05, 1);
  const auto low = annulus_stats(2, 10000, 0.05, 2);
  return {high.fraction_outside == 0.0 && low.fraction_outside > 0.5,
          "D=16384 fraction outside " + detail::fmt(high.fraction_outside) + ", D=2 fraction outside " +
              detail::fmt(low.fraction_outside)};
}

// 6
inline Check transport_cost_check(const Options&) {
  const double analytic = transport_cost(16384, 100, 0).analytic_cost;
  bool ok = std::abs(analytic - 0.5) <= 0.01 * 0.5;
  std::string detail = "analytic(16384) " + detail::fmt(analytic);
  for (std::uint64_t d : {256u, 4096u, 16384u}) {
    const auto r = transport_cost(d, 100000, 3 + d);
    const double rel = std::abs(r.mc_cost - r.analytic_cost) / r.analytic_cost;
    ok = ok && rel <= 0.05;
    detail += "; D=" + std::to_string(d) + " mc " + detail::fmt(r.mc_cost) + " rel.err " + detail::fmt(rel);
  }
  return {ok, detail};
}

// 7
inline Check uniform_weight_null_gradient(const Options&) {
  const Fixture fx = make_fixture(8);
  const PromptContext prompt = prepare_prompt(fx.encoders, fx.tokens, TokenWeighting::uniform, 0.5, 3.0);
  WeightVector all_columns{std::vector<double>(fx.tokens.size(), 1.75), 1.75, 1.75};
  const ObjectiveConfig cfg{kDefaultGuidanceScale, kDefaultLayerWeights, all_columns};
  const auto r = evaluate(fx.denoiser, fx.z0, prompt.text_c, prompt.text_null, cfg);
  const double alpha_sum = std::accumulate(cfg.layer_weights.begin(), cfg.layer_weights.end(), 0.0);
  const double expected = alpha_sum * static_cast<double>(fx.z0.shape().positions()) * 1.75;
  const double gn = r.gradient.norm();
  const bool ok = gn <= 1e-10 * expected && detail::relative(r.value, expected) <= 1e-12;
  return {ok, "|grad| " + detail::fmt(gn) + " vs 1e-10*objective " + detail::fmt(1e-10 * expected) +
                  ", value rel.err " + detail::fmt(detail::relative(r.value, expected))};
}

// 8
inline Check cfg_collapse(const Options&) {
  const Fixture fx = make_fixture(8);
  const PromptContext prompt = prepare_prompt(fx.encoders, fx.tokens, TokenWeighting::oracle, 0.5, 3.0);
  ObjectiveConfig cfg{1.0, kDefaultLayerWeights, prompt.weights};
  const double guided_one = evaluate_value(fx.denoiser, fx.z0, prompt.text_c, prompt.text_null, cfg);
  const double cond_only = evaluate_conditional_only(fx.denoiser, fx.z0, prompt.text_c, cfg);
  cfg.guidance_scale = 0.0;
  const double guided_zero = evaluate_value(fx.denoiser, fx.z0, prompt.text_c, prompt.text_null, cfg);
  const double null_only = evaluate_conditional_only(fx.denoiser, fx.z0, prompt.text_null, cfg);
  const double e1 = detail::relative(guided_one, cond_only);
  const double e0 = detail::relative(guided_zero, null_only);
  return {e1 <= 1e-12 && e0 <= 1e-12,
          "s=1 vs conditional rel.err " + detail::fmt(e1) + ", s=0 vs null rel.err " + detail::fmt(e0)};
}

/// Four valid tokens with explicit 3-d embeddings; the last one is
/// orthogonal to the others and twice as long.
inline std::shared_ptr<TableEncoder> hand_fixture_encoder() {
  Matrix table(5, 3);
  const double rows[5][3] = {{0, 0, 0}, {1, 0, 0}, {0.8, 0.6, 0}, {0.6, 0.8, 0}, {0, 0, 2}};
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 3; ++k) table(i, k) = rows[i][k];
  return std::make_shared<TableEncoder>(std::move(table), 0.0, "hand");
}

// Impact scores and weights computed independently in 30-digit arithmetic.
inline constexpr double kHandImpact[4] = {0.032636903378035371339, 0.024610770690093570812,
                                          0.029434450858403839209, 0.18839475625624809003};
inline constexpr double kHandWeights[4] = {0.62251095032578657271, 0.5, 0.57362869073609641986, 3.0};

// 9
inline Check token_weighting_fixture(const Options&) {
  const EncoderList encoders{hand_fixture_encoder()};
  const TokenSequence tokens{{1, 2, 3, 4}, {false, false, false, false}, 0};
  const auto impact = impact_scores(tokens, encoders);
  const auto weights = affine_normalize(impact, 0.5, 3.0);
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) {
    worst = std::max(worst, std::abs(impact.scores[j] - kHandImpact[j]));
    worst = std::max(worst, std::abs(weights.weights[j] - kHandWeights[j]));
  }
  std::vector<std::size_t> order(4), expected_order{3, 0, 2, 1};
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return impact.scores[a] > impact.scores[b]; });

  const TokenSequence ties{{1, 1, 1, 1}, {false, false, false, false}, 0};
  const auto tie_weights = affine_normalize(impact_scores(ties, encoders), 0.5, 3.0);
  const bool tie_ok = std::all_of(tie_weights.weights.begin(), tie_weights.weights.end(),
                                  [](double w) { return w == 1.75; });
  return {worst <= 1e-12 && order == expected_order && tie_ok,
          "max deviation from hand values " + detail::fmt(worst) + ", ordering " +
              (order == expected_order ? "matches" : "differs") + ", tie case " + (tie_ok ? "1.75" : "wrong")};
}

// 10
inline Check overshoot(const Options&) {
  const Fixture fx = make_fixture(8);
  const auto grid = default_overshoot_grid();
  const auto r = overshoot_diagnostic(fx.denoiser, fx.encoders, fx.tokens, fx.z0, grid, kDefaultGuidanceScale,
                                      kDefaultLayerWeights, 0.5, 3.0);
  const bool first_gain = r.single_step_gains.front() > 0.0;
  std::string detail = "gain(eta=" + detail::fmt(grid.front()) + ") " + detail::fmt(r.single_step_gains.front()) +
                       ", peak eta " + detail::fmt(r.empirical_peak_eta) + ", curvature " +
                       detail::fmt(r.curvature_uHu);
  bool agree = true;
  if (r.curvature_uHu < 0.0) {
    const double ratio = std::max(r.empirical_peak_eta, r.predicted_threshold) /
                         std::min(r.empirical_peak_eta, r.predicted_threshold);
    agree = ratio <= 3.0;
    detail += ", predicted threshold " + detail::fmt(r.predicted_threshold) + " ratio " + detail::fmt(ratio);
  } else {
    detail += " >= 0: threshold is +inf, peak comparison not applicable";
  }
  return {first_gain && agree, detail};
}

inline json determinism_config() {
  return {{"schema", 1},
          {"seed", kFixtureLatentSeed},
          {"denoiser", {{"channels", 4}, {"height", 8}, {"width", 8}, {"seed", kFixtureDenoiserSeed}}},
          {"optimizer", {{"eta", 0.005}, {"iterations", 10}, {"mode", "spherical"}}},
          {"prompt", to_json(fixture_prompt())}};
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 11
inline Check determinism(const Options& opts) {
  const auto dir = opts.scratch_dir / "determinism";
  std::filesystem::create_directories(dir);
  const auto config_path = dir / "config.json";
  {
    std::ofstream out(config_path);
    out << determinism_config().dump(2) << '\n';
  }
  std::ostringstream sink;
  CommandOptions a;
  a.config = config_path;
  a.output = dir / "run_a";
  CommandOptions b = a;
  b.output = dir / "run_b";
  if (cmd_optimize(a, sink, sink) != kExitOk || cmd_optimize(b, sink, sink) != kExitOk)
    return {false, "cmd_optimize failed: " + sink.str()};
  bool same = true;
  std::string detail;
  for (const char* name : {"latent.bin", "trajectory.csv", "weights.json"}) {
    const auto x = slurp(*a.output / name);
    const auto y = slurp(*b.output / name);
    const bool eq = !x.empty() && x == y;
    same = same && eq;
    detail += std::string(detail.empty() ? "" : ", ") + name + (eq ? " identical" : " DIFFERS");
  }
  return {same, detail};
}

// 12
inline Check ablation_ordering(const Options&) {
  const Fixture fx = make_fixture(8);
  const auto rows = run_sweep(fx.denoiser, fx.encoders, fx.tokens, fx.z0, OptimizerConfig{}, {0.005, 0.05}, {10});
  auto find = [&](SweepMode m, double eta) {
    return *std::find_if(rows.begin(), rows.end(), [&](const SweepRow& r) { return r.mode == m && r.eta == eta; });
  };
  const auto oracle = find(SweepMode::spherical_oracle, 0.005);
  const auto uniform = find(SweepMode::spherical_uniform, 0.005);
  const auto sph = find(SweepMode::spherical_oracle, 0.05);
  const auto euc = find(SweepMode::euclidean, 0.05);
  const bool ordering = oracle.final_objective >= uniform.final_objective;
  const bool stability = sph.norm_drift <= 1e-10 && euc.norm_drift > 1e-10;
  return {ordering && stability, "eta=0.005 N=10: oracle " + detail::fmt(oracle.final_objective) + " vs uniform " +
                                     detail::fmt(uniform.final_objective) + "; eta=0.05 drift spherical " +
                                     detail::fmt(sph.norm_drift) + ", euclidean " + detail::fmt(euc.norm_drift)};
}

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "norm preservation", "geometry", 5.0, norm_preservation},
      {2, "euclidean inflation", "geometry", 5.0, euclidean_inflation},
      {3, "gradient orthogonality", "gradient", 10.0, gradient_orthogonality},
      {4, "analytic gradient vs finite differences", "gradient", 30.0, finite_difference_agreement},
      {5, "gaussian annulus", "geometry", 5.0, gaussian_annulus},
      {6, "transport cost", "geometry", 20.0, transport_cost_check},
      {7, "uniform-weight null gradient", "gradient", 1.0, uniform_weight_null_gradient},
      {8, "cfg collapse", "gradient", 1.0, cfg_collapse},
      {9, "token weighting fixture", "weighting", 1.0, token_weighting_fixture},
      {10, "overshoot diagnostic", "overshoot", 10.0, overshoot},
      {11, "determinism", "determinism", 5.0, determinism},
      {12, "ablation ordering", "weighting", 10.0, ablation_ordering},
  };
  return all;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"geometry", "gradient", "weighting", "overshoot", "determinism", "all"};
  return names;
}

inline bool is_suite(const std::string& name) {
  const auto& n = suite_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

inline CriterionResult run_criterion(const Criterion& c, const Options& opts) {
  const auto start = std::chrono::steady_clock::now();
  Check check;
  try {
    check = c.run(opts);
  } catch (const std::exception& e) {
    check = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {c.id, c.name, check.passed && secs <= c.limit_seconds, check.detail, secs, c.limit_seconds};
}

inline void print_result(std::ostream& out, const CriterionResult& r) {
  std::ostringstream time;
  time.precision(2);
  time << std::fixed << r.seconds << "s/" << r.limit_seconds << "s";
  out << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << " (" << time.str() << "): " << r.detail
      << '\n';
}

/// Runs every criterion in `suite` ("all" for everything), printing one line
/// per criterion. Returns the results.
inline std::vector<CriterionResult> run_suite(const std::string& suite, const Options& opts, std::ostream& out) {
  std::vector<CriterionResult> results;
  for (const auto& c : criteria()) {
    if (suite != "all" && c.suite != suite) continue;
    results.push_back(run_criterion(c, opts));
    print_result(out, results.back());
  }
  return results;
}

}  // namespace oracle_noise::verify

namespace oracle_noise {

/// Exit 0 iff every selected criterion passes; 2 for an unknown suite.
inline int cmd_verify(const std::string& suite, const verify::Options& opts, std::ostream& out, std::ostream& err) {
  if (!verify::is_suite(suite)) {
    err << "error: unknown suite '" << suite << "' (expected geometry, gradient, weighting, overshoot, "
        << "determinism or all)\n";
    return kExitConfig;
  }
  const auto results = verify::run_suite(suite, opts, out);
  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.passed; });
  out << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace oracle_noise
