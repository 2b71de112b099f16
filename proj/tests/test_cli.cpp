#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracle_noise/commands.hpp"
#include "oracle_noise/fixtures.hpp"
#include "oracle_noise/verify.hpp"

using namespace oracle_noise;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "oracle_noise_cli_test" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path write_config(const json& j, const std::string& name = "config.json") const {
    return write(name, j.dump(2));
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  int optimize(const fs::path& config, const fs::path& output) {
    CommandOptions o;
    o.config = config;
    o.output = output;
    out_.str("");
    err_.str("");
    return cmd_optimize(o, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

json base_config() { return verify::determinism_config(); }

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ORACLE_NOISE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_F(CliTest, OptimizeWritesAllOutputs) {
  ASSERT_EQ(optimize(write_config(base_config()), dir_ / "out"), kExitOk) << err_.str();
  for (const char* f : {"latent.bin", "weights.json", "trajectory.csv", "summary.json"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  const auto summary = json::parse(slurp(dir_ / "out" / "summary.json"));
  EXPECT_LE(summary["norm_drift"].get<double>(), 1e-10);
  EXPECT_GT(summary["final_objective"].get<double>(), summary["initial_objective"].get<double>());
  EXPECT_TRUE(summary.contains("wall_time_ms"));

  const Latent z = read_latent(dir_ / "out" / "latent.bin");
  EXPECT_EQ(z.shape(), (Shape{4, 8, 8}));
  const auto weights = json::parse(slurp(dir_ / "out" / "weights.json"));
  EXPECT_EQ(weights.size(), 10u);
  EXPECT_EQ(weights[0].get<double>(), 0.0);

  std::istringstream csv(slurp(dir_ / "out" / "trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, kTrajectoryHeader);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 10);
}

TEST_F(CliTest, EuclideanModeDrifts) {
  auto cfg = base_config();
  cfg["optimizer"]["mode"] = "euclidean";
  ASSERT_EQ(optimize(write_config(cfg), dir_ / "out"), kExitOk);
  EXPECT_GT(json::parse(slurp(dir_ / "out" / "summary.json"))["norm_drift"].get<double>(), 0.0);
}

TEST_F(CliTest, ByteIdenticalReruns) {
  const auto config = write_config(base_config());
  ASSERT_EQ(optimize(config, dir_ / "a"), kExitOk);
  ASSERT_EQ(optimize(config, dir_ / "b"), kExitOk);
  for (const char* f : {"latent.bin", "weights.json", "trajectory.csv"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, SeedOverrideChangesLatent) {
  CommandOptions o;
  o.config = write_config(base_config());
  o.output = dir_ / "a";
  ASSERT_EQ(cmd_optimize(o, out_, err_), kExitOk);
  o.output = dir_ / "b";
  o.seed = 8;
  ASSERT_EQ(cmd_optimize(o, out_, err_), kExitOk);
  EXPECT_NE(slurp(dir_ / "a" / "latent.bin"), slurp(dir_ / "b" / "latent.bin"));
  EXPECT_EQ(json::parse(slurp(dir_ / "b" / "summary.json"))["seed"].get<std::uint64_t>(), 8u);
}

TEST_F(CliTest, MalformedJsonIsConfigErrorWithoutOutputs) {
  const auto config = write("bad.json", "{\n  \"schema\": 1,\n  \"seed\": 7,,\n}\n");
  EXPECT_EQ(optimize(config, dir_ / "out"), kExitConfig);
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  EXPECT_NE(err_.str().find("bad.json:3:"), std::string::npos) << err_.str();
}

TEST_F(CliTest, ValidationFailuresAreConfigErrors) {
  auto unknown = base_config();
  unknown["optimiser"] = json::object();
  auto no_schema = base_config();
  no_schema.erase("schema");
  auto wrong_schema = base_config();
  wrong_schema["schema"] = 2;
  auto alpha_mismatch = base_config();
  alpha_mismatch["objective"] = {{"layer_weights", {1.0, 2.0}}};
  auto bad_bounds = base_config();
  bad_bounds["objective"] = {{"w_min", 3.0}, {"w_max", 0.5}};
  auto vocab = base_config();
  vocab["prompt"]["ids"][1] = 500;
  auto nested_unknown = base_config();
  nested_unknown["optimizer"]["etaa"] = 0.1;
  auto bad_mode = base_config();
  bad_mode["optimizer"]["mode"] = "hyperbolic";
  auto negative = base_config();
  negative["optimizer"]["iterations"] = -3;

  int i = 0;
  for (const auto& cfg : {unknown, no_schema, wrong_schema, alpha_mismatch, bad_bounds, vocab, nested_unknown,
                          bad_mode, negative}) {
    EXPECT_EQ(optimize(write_config(cfg, "c" + std::to_string(i) + ".json"), dir_ / "out"), kExitConfig)
        << cfg.dump();
    const std::string message = err_.str();
    EXPECT_FALSE(message.empty());
    EXPECT_EQ(std::count(message.begin(), message.end(), '\n'), 1) << message;
    ++i;
  }
  EXPECT_FALSE(fs::exists(dir_ / "out"));
  EXPECT_EQ(optimize(dir_ / "missing.json", dir_ / "out"), kExitConfig);
}

TEST_F(CliTest, EmptyValidSetIsRuntimeError) {
  auto cfg = base_config();
  cfg["prompt"] = to_json(TokenSequence::null_prompt(6, 0));
  EXPECT_EQ(optimize(write_config(cfg), dir_ / "out"), kExitRuntime);
  EXPECT_FALSE(fs::exists(dir_ / "out" / "summary.json"));
}

TEST_F(CliTest, PromptFromFileAndText) {
  auto cfg = base_config();
  write("prompt.json", to_json(fixture_prompt()).dump());
  cfg.erase("prompt");
  cfg["prompt_path"] = "prompt.json";
  ASSERT_EQ(optimize(write_config(cfg), dir_ / "file"), kExitOk) << err_.str();
  ASSERT_EQ(optimize(write_config(base_config(), "inline.json"), dir_ / "inline"), kExitOk);
  EXPECT_EQ(slurp(dir_ / "file" / "latent.bin"), slurp(dir_ / "inline" / "latent.bin"));

  auto text = base_config();
  text["prompt"] = {{"text", "a red cube on a blue sphere"}};
  ASSERT_EQ(optimize(write_config(text, "text.json"), dir_ / "text"), kExitOk) << err_.str();

  auto both = base_config();
  both["prompt_path"] = "prompt.json";
  EXPECT_EQ(optimize(write_config(both, "both.json"), dir_ / "both"), kExitConfig);
}

TEST_F(CliTest, SweepGridShapeAndOrdering) {
  CommandOptions o;
  o.config = write_config(base_config());
  o.output = dir_ / "sweep";
  o.eta_grid = {0.05, 0.005, 0.01};
  o.n_grid = {10, 1, 5};
  ASSERT_EQ(cmd_sweep(o, out_, err_), kExitOk) << err_.str();
  std::istringstream csv(slurp(dir_ / "sweep" / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, kSweepHeader);
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 27u);
  EXPECT_EQ(lines.front().rfind("euclidean,0.0050000000000000001,1,", 0), 0u) << lines.front();
  EXPECT_EQ(lines.back().rfind("spherical-uniform,0.050000000000000003,10,", 0), 0u) << lines.back();
}

TEST(Sweep, RowsAndOrderings) {
  const auto fx = make_fixture();
  const auto rows = run_sweep(fx.denoiser, fx.encoders, fx.tokens, fx.z0, {}, {0.005, 0.02, 0.05}, {1, 5, 10});
  ASSERT_EQ(rows.size(), 27u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    EXPECT_TRUE(std::tie(a.mode, a.eta, a.iterations) < std::tie(b.mode, b.eta, b.iterations));
  }
  for (std::size_t i = 0; i < 9; ++i) {
    ASSERT_EQ(rows[i].mode, SweepMode::euclidean);
    if (i % 3) {
      EXPECT_GT(rows[i].norm_drift, rows[i - 1].norm_drift);
    }
  }
  for (const auto& r : rows)
    if (r.mode != SweepMode::euclidean) {
      EXPECT_LE(r.norm_drift, 1e-10);
    }
  auto at = [&](SweepMode m, double eta, std::uint32_t n) {
    return std::find_if(rows.begin(), rows.end(),
                        [&](const SweepRow& r) { return r.mode == m && r.eta == eta && r.iterations == n; })
        ->final_objective;
  };
  EXPECT_GE(at(SweepMode::spherical_oracle, 0.005, 10), at(SweepMode::spherical_uniform, 0.005, 10));
}

TEST(Sweep, IndependentOfThreadCount) {
  const auto fx = make_fixture();
  std::ostringstream one, many;
  write_sweep_csv(one, run_sweep(fx.denoiser, fx.encoders, fx.tokens, fx.z0, {}, {0.01, 0.05}, {2, 4}, 1));
  write_sweep_csv(many, run_sweep(fx.denoiser, fx.encoders, fx.tokens, fx.z0, {}, {0.01, 0.05}, {2, 4}, 4));
  EXPECT_EQ(one.str(), many.str());
}

TEST_F(CliTest, SweepRejectsBadGrid) {
  CommandOptions o;
  o.config = write_config(base_config());
  o.output = dir_ / "sweep";
  o.eta_grid = {0.01, -1.0};
  EXPECT_EQ(cmd_sweep(o, out_, err_), kExitConfig);
  o.eta_grid = {0.01};
  o.n_grid = {0};
  EXPECT_EQ(cmd_sweep(o, out_, err_), kExitConfig);
  EXPECT_FALSE(fs::exists(dir_ / "sweep"));
}

TEST_F(CliTest, StatsReport) {
  StatsOptions o;
  o.dimension = 256;
  o.annulus_samples = 500;
  o.transport_samples = 1000;
  o.output = dir_ / "stats";
  ASSERT_EQ(cmd_stats(o, out_, err_), kExitOk);
  const auto j = json::parse(slurp(dir_ / "stats" / "stats.json"));
  EXPECT_EQ(j["annulus"]["dimension"].get<int>(), 256);
  EXPECT_NEAR(j["transport"]["analytic_cost"].get<double>(), 0.49975466852712071, 1e-9);
  o.dimension = 1;
  EXPECT_EQ(cmd_stats(o, out_, err_), kExitConfig);
}

TEST(ConfigSamples, ShippedConfigsParse) {
  for (const char* name : {"toy.json", "toy_euclidean.json", "sdxl_scale.json", "text_prompt.json"}) {
    const auto path = fs::path(ORACLE_NOISE_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(load_run_config(path)) << path;
  }
}

TEST_F(CliTest, BinaryExitCodes) {
  EXPECT_EQ(run_cli("verify --suite nope"), kExitConfig);
  EXPECT_EQ(run_cli("optimize"), kExitConfig);
  EXPECT_EQ(run_cli("frobnicate"), kExitConfig);
  EXPECT_EQ(run_cli("optimize --config " + write("bad.json", "{").string()), kExitConfig);
  const auto config = write_config(base_config());
  EXPECT_EQ(run_cli("optimize --config " + config.string() + " --output " + (dir_ / "o").string()), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "summary.json"));
  EXPECT_EQ(run_cli("sweep --config " + config.string() + " --output " + (dir_ / "s").string() +
                    " --eta-grid 0.01,0.02 --n-grid 1,2"),
            kExitOk);
  std::ifstream csv(dir_ / "s" / "sweep.csv");
  EXPECT_EQ(std::count(std::istreambuf_iterator<char>(csv), {}, '\n'), 1 + 3 * 2 * 2);
  EXPECT_EQ(run_cli("verify --suite weighting --output " + (dir_ / "v").string()), kExitOk);
  EXPECT_EQ(run_cli("stats --dim 64 --samples 100 --transport-samples 200"), kExitOk);
}
