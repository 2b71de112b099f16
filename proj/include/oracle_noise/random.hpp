#pragma once

// Reproducible standard-normal sampling.
//
// Raw bits come from xoshiro256** (Blackman and Vigna), its state filled by
// SplitMix64 from a 64-bit seed. Normal variates use the 256-layer ziggurat of Marsaglia and
// Tsang (2000) with the tail handled by Marsaglia's exponential rejection.
// Distributions from <random> are not used because their algorithms are
// implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace oracle_noise {

/// SplitMix64 finalizer applied to (seed, stream). Used to give every Monte
/// Carlo sample and every weight matrix its own generator.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// xoshiro256**: 256-bit state, period 2^256 - 1. Satisfies
/// UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept {
    for (std::uint64_t i = 0; i < 4; ++i) s_[i] = mix_seed(seed, i);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

namespace detail {

struct ZigguratTables {
  static constexpr double kR = 3.6541528853610088;
  static constexpr double kV = 0.00492867323399;

  std::array<double, 257> x{};
  std::array<double, 257> f{};

  ZigguratTables() {
    auto pdf = [](double v) { return std::exp(-0.5 * v * v); };
    x[0] = kV / pdf(kR);
    x[1] = kR;
    for (int i = 2; i < 256; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + pdf(x[i - 1])));
    }
    x[256] = 0.0;
    for (int i = 0; i < 257; ++i) f[i] = pdf(x[i]);
  }
};

inline const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Standard normal generator: ziggurat over xoshiro256**.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed), tables_(&detail::ziggurat_tables()) {}

  double operator()() {
    const auto& x = tables_->x;
    const auto& f = tables_->f;
    for (;;) {
      const std::uint64_t bits = engine_();
      const std::size_t layer = bits & 0xffu;
      const double u = 2.0 * to_unit(bits) - 1.0;
      const double candidate = u * x[layer];
      if (std::abs(candidate) < x[layer + 1]) return candidate;
      if (layer == 0) return tail(u < 0.0);
      const double height = f[layer + 1] + (f[layer] - f[layer + 1]) * to_unit(engine_());
      if (height < std::exp(-0.5 * candidate * candidate)) return candidate;
    }
  }

  void fill(std::span<double> out) {
    for (double& v : out) v = (*this)();
  }

  /// Uniform on [0, 1) built from the top 53 bits.
  double uniform() { return to_unit(engine_()); }

  std::uint64_t bits() { return engine_(); }

 private:
  static double to_unit(std::uint64_t bits) noexcept { return static_cast<double>(bits >> 11) * 0x1.0p-53; }
  double open_unit() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double tail(bool negative) {
    constexpr double r = detail::ZigguratTables::kR;
    double x = 1.0;
    double y = 0.0;
    while (-2.0 * y < x * x) {
      x = std::log(open_unit()) / r;
      y = std::log(open_unit());
    }
    return negative ? x - r : r - x;
  }

  Xoshiro256 engine_;
  const detail::ZigguratTables* tables_;
};

}  // namespace oracle_noise
