#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracle_noise/fixtures.hpp"
#include "oracle_noise/optimizer.hpp"
#include "oracle_noise/serialization.hpp"

using namespace oracle_noise;

TEST(Optimizer, SphericalPreservesNormAndImproves) {
  const auto fx = make_fixture();
  const auto r = oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, OptimizerConfig{});
  EXPECT_NEAR(r.latent.norm() / fx.z0.norm(), 1.0, 1e-10);
  ASSERT_EQ(r.trajectory.rows.size(), 10u);
  EXPECT_FALSE(r.trajectory.stopped_at_stationary_point);
  EXPECT_GT(r.final_objective, r.trajectory.rows.front().objective);
  for (const auto& row : r.trajectory.rows) EXPECT_LE(std::abs(row.radial_cosine), 1e-8);
  // Regression baseline for the seeded fixture.
  EXPECT_NEAR(r.trajectory.rows.front().objective, 278.64292619613235, 1e-9);
  EXPECT_NEAR(r.final_objective, 291.64268154872838, 1e-9);
}

TEST(Optimizer, ZeroStepLeavesLatentUnchanged) {
  const auto fx = make_fixture();
  OptimizerConfig cfg;
  cfg.eta = 0.0;
  cfg.iterations = 1;
  EXPECT_EQ(oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg).latent, fx.z0);
  EXPECT_EQ(euclidean_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg).latent, fx.z0);
}

TEST(Optimizer, Deterministic) {
  const auto fx = make_fixture();
  OptimizerConfig cfg;
  cfg.eta = 0.02;
  const auto a = oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg);
  const auto b = oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg);
  EXPECT_EQ(a.latent, b.latent);
  EXPECT_EQ(trajectory_csv(a.trajectory), trajectory_csv(b.trajectory));
  EXPECT_EQ(a.weights.weights, b.weights.weights);
}

TEST(Optimizer, EuclideanInflatesEveryStep) {
  const auto fx = make_fixture();
  OptimizerConfig cfg;
  cfg.eta = 0.05;
  const auto r = euclidean_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg);
  const auto& rows = r.trajectory.rows;
  double telescoped = 0.0;
  double orthogonal_part = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double zg = rows[k].radial_cosine * rows[k].norm * rows[k].grad_norm;
    telescoped += 2 * cfg.eta * zg + cfg.eta * cfg.eta * rows[k].grad_norm * rows[k].grad_norm;
    orthogonal_part += cfg.eta * cfg.eta * rows[k].grad_norm * rows[k].grad_norm;
    const double next = k + 1 < rows.size() ? rows[k + 1].norm : r.latent.norm();
    EXPECT_GT(next, rows[k].norm) << "step " << k;
  }
  const double growth = r.latent.norm() * r.latent.norm() - fx.z0.norm() * fx.z0.norm();
  EXPECT_NEAR(growth, telescoped, 1e-8 * std::abs(telescoped));
  EXPECT_GE(growth, orthogonal_part * (1 - 1e-6));
}

TEST(Optimizer, UniformWeightingZeroesSpecials) {
  const auto fx = make_fixture();
  OptimizerConfig cfg;
  cfg.weighting = TokenWeighting::uniform;
  const auto r = oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, cfg);
  for (std::size_t j = 0; j < fx.tokens.size(); ++j) EXPECT_EQ(r.weights.weights[j], fx.tokens.is_valid(j) ? 1.0 : 0.0);
}

// A prompt with no special tokens under uniform weighting puts equal weight
// on every softmax column, so the objective is constant and the first step
// is a stationary point.
TEST(Optimizer, StopsAtStationaryPoint) {
  const auto fx = make_fixture();
  const TokenSequence all_valid{{5, 6, 7, 8}, {false, false, false, false}, 0};
  OptimizerConfig cfg;
  cfg.weighting = TokenWeighting::uniform;
  const auto r = oracle_optimize(fx.denoiser, fx.encoders, all_valid, fx.z0, cfg);
  EXPECT_TRUE(r.trajectory.stopped_at_stationary_point);
  EXPECT_EQ(r.trajectory.rows.size(), 1u);
  EXPECT_EQ(r.latent, fx.z0);
}

TEST(Optimizer, Errors) {
  const auto fx = make_fixture();
  EXPECT_THROW(oracle_optimize(fx.denoiser, fx.encoders, TokenSequence::null_prompt(4, 0), fx.z0, {}), EmptyValidSet);
  OptimizerConfig bad;
  bad.iterations = 0;
  EXPECT_THROW(oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, bad), InvalidArgument);
  bad = {};
  bad.w_min = 3.0;
  EXPECT_THROW(oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, fx.z0, bad), InvalidBounds);
  EXPECT_THROW(oracle_optimize(fx.denoiser, fx.encoders, fx.tokens, Latent::zeros(fx.z0.shape()), {}), ZeroLatent);
}

namespace {

// Rayleigh quotient zᵀAz/‖z‖² with diagonal A: scale invariant, with
// second derivative 2(uᵀAu − zᵀAz)/‖z‖² along the geodesic for u ⊥ z, ‖u‖ = ‖z‖.
ScalarField rayleigh(std::vector<double> diag) {
  auto value = [diag](const Latent& z) {
    double q = 0.0;
    for (std::size_t i = 0; i < diag.size(); ++i) q += diag[i] * z[i] * z[i];
    return q / dot(z.values(), z.values());
  };
  auto gradient = [diag, value](const Latent& z) {
    const double n = dot(z.values(), z.values());
    const double f = value(z);
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * (diag[i] - f) * z[i] / n;
    return Latent(z.shape(), std::move(g));
  };
  return {value, gradient};
}

}  // namespace

TEST(Overshoot, CurvatureMatchesSyntheticQuadratic) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Latent z = sample_standard_gaussian(Shape{1, 1, 32}, seed);
    std::vector<double> diag(32);
    for (std::size_t i = 0; i < 32; ++i) diag[i] = std::sin(1.0 + i * (seed + 1.0));
    const ScalarField f = rayleigh(diag);
    const auto grid = default_overshoot_grid(0.01, 3.5);
    const auto r = overshoot_diagnostic(f, z, grid);

    const auto g = project_to_tangent(z, f.gradient(z));
    const double scale = z.norm() / g.norm();
    double uau = 0.0, zaz = 0.0;
    for (std::size_t i = 0; i < 32; ++i) {
      const double u = g.values()[i] * scale;
      uau += diag[i] * u * u;
      zaz += diag[i] * z[i] * z[i];
    }
    const double n = dot(z.values(), z.values());
    const double analytic = 2.0 * (uau - zaz) / n;
    EXPECT_NEAR(r.curvature_uHu, analytic, 1e-3 * std::abs(analytic)) << "seed " << seed;
    EXPECT_GT(r.single_step_gains.front(), 0.0);
    if (r.curvature_uHu < 0.0) {
      EXPECT_DOUBLE_EQ(r.predicted_threshold, -2.0 * r.directional_gain / r.curvature_uHu);
    } else {
      EXPECT_TRUE(std::isinf(r.predicted_threshold));
    }
  }
}

TEST(Overshoot, FixtureReport) {
  const auto fx = make_fixture();
  const auto grid = default_overshoot_grid();
  const auto r = overshoot_diagnostic(fx.denoiser, fx.encoders, fx.tokens, fx.z0, grid, kDefaultGuidanceScale,
                                      kDefaultLayerWeights, 0.5, 3.0);
  ASSERT_EQ(r.single_step_gains.size(), grid.size());
  EXPECT_GT(r.single_step_gains.front(), 0.0);
  EXPECT_GT(r.directional_gain, 0.0);
  const double peak = *std::max_element(r.single_step_gains.begin(), r.single_step_gains.end());
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] >= std::numbers::pi) {
      EXPECT_LE(r.single_step_gains[i], peak);
    }
}

TEST(Overshoot, GridValidation) {
  const auto fx = make_fixture();
  const std::vector<double> empty, unsorted{0.1, 0.05}, nonpositive{0.0, 0.1};
  for (const auto* g : {&empty, &unsorted, &nonpositive})
    EXPECT_THROW(overshoot_diagnostic(fx.denoiser, fx.encoders, fx.tokens, fx.z0, *g, 7.5, kDefaultLayerWeights, 0.5,
                                      3.0),
                 InvalidArgument);
  EXPECT_EQ(default_overshoot_grid(0.5, 2.0), (std::vector<double>{0.5, 1.0, 1.5, 2.0}));
}
