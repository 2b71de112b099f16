#pragma once

// Seeded reference setups shared by the verification suite, the tests and
// the sample configs.

#include <cstdint>
#include <string>

#include "oracle_noise/denoiser.hpp"
#include "oracle_noise/encoding.hpp"
#include "oracle_noise/gaussian_geometry.hpp"
#include "oracle_noise/latent.hpp"
#include "oracle_noise/optimizer.hpp"

namespace oracle_noise {

struct Fixture {
  ToyDenoiser denoiser;
  EncoderList encoders;
  TokenSequence tokens;
  Latent z0;
};

inline constexpr std::uint64_t kFixtureDenoiserSeed = 2024;
inline constexpr std::uint64_t kFixtureLatentSeed = 7;
inline constexpr std::uint32_t kFixtureDText = 16;
inline constexpr std::uint32_t kFixtureVocab = 64;

/// BOS, five content tokens, EOS, three PAD.
inline TokenSequence fixture_prompt() {
  return TokenSequence{{1, 17, 23, 42, 8, 55, 2, 0, 0, 0},
                       {true, false, false, false, false, false, true, true, true, true},
                       0};
}

inline EncoderList fixture_encoders(std::uint64_t seed = 11) {
  return {toy_encoder(seed, kFixtureDText, kFixtureVocab), toy_encoder(seed + 1, kFixtureDText, kFixtureVocab)};
}

/// Toy pipeline with a latent of shape (4, side, side): side 8 gives D = 256,
/// side 64 gives D = 16384.
inline Fixture make_fixture(std::uint32_t side = 8, std::uint64_t latent_seed = kFixtureLatentSeed,
                            std::uint64_t denoiser_seed = kFixtureDenoiserSeed) {
  DenoiserConfig cfg;
  cfg.latent_shape = Shape{4, side, side};
  cfg.d_text = kFixtureDText;
  cfg.seed = denoiser_seed;
  return Fixture{ToyDenoiser(cfg), fixture_encoders(), fixture_prompt(),
                 sample_standard_gaussian(cfg.latent_shape, latent_seed)};
}

}  // namespace oracle_noise
