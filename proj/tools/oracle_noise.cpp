#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracle_noise/oracle_noise.hpp"

namespace on = oracle_noise;

int main(int argc, char** argv) {
  CLI::App app{"Spherical latent optimization against a toy cross-attention objective"};
  app.require_subcommand(1);

  on::CommandOptions run_opts;
  std::uint64_t seed = 0;
  std::string output;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", run_opts.config, "JSON run configuration")->required();
    cmd->add_option("--seed", seed, "latent seed (overrides the config)");
    cmd->add_option("--output", output, "output directory (overrides the config)");
  };

  auto* optimize = app.add_subcommand("optimize", "run one optimization");
  add_run_flags(optimize);

  auto* sweep = app.add_subcommand("sweep", "eta x N grid over euclidean, spherical-oracle and spherical-uniform");
  add_run_flags(sweep);
  sweep->add_option("--eta-grid", run_opts.eta_grid, "comma-separated step sizes")->delimiter(',');
  sweep->add_option("--n-grid", run_opts.n_grid, "comma-separated iteration counts")->delimiter(',');

  std::string suite = "all";
  on::verify::Options verify_opts;
  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  verify->add_option("--suite", suite, "geometry | gradient | weighting | overshoot | determinism | all");
  verify->add_option("--output", output, "scratch directory for file-writing checks");

  on::StatsOptions stats_opts;
  auto* stats = app.add_subcommand("stats", "gaussian annulus and transport-cost report");
  stats->add_option("--dim", stats_opts.dimension, "latent dimension");
  stats->add_option("--samples", stats_opts.annulus_samples, "annulus Monte Carlo samples");
  stats->add_option("--transport-samples", stats_opts.transport_samples, "transport Monte Carlo samples");
  stats->add_option("--epsilon", stats_opts.epsilon, "relative annulus half-width");
  stats->add_option("--seed", stats_opts.seed, "sampling seed");
  stats->add_option("--output", output, "also write stats.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? on::kExitOk : on::kExitConfig;
  }

  if (*optimize || *sweep) {
    if (optimize->count("--seed") || sweep->count("--seed")) run_opts.seed = seed;
    if (!output.empty()) run_opts.output = output;
    return *optimize ? on::cmd_optimize(run_opts, std::cout, std::cerr) : on::cmd_sweep(run_opts, std::cout, std::cerr);
  }
  if (*verify) {
    if (!output.empty()) verify_opts.scratch_dir = output;
    return on::cmd_verify(suite, verify_opts, std::cout, std::cerr);
  }
  if (!output.empty()) stats_opts.output = output;
  return on::cmd_stats(stats_opts, std::cout, std::cerr);
}
