#pragma once

#include "oracle_noise/errors.hpp"
#include "oracle_noise/linalg.hpp"
#include "oracle_noise/random.hpp"
#include "oracle_noise/latent.hpp"
#include "oracle_noise/manifold.hpp"
#include "oracle_noise/parallel.hpp"
#include "oracle_noise/gaussian_geometry.hpp"
#include "oracle_noise/encoding.hpp"
#include "oracle_noise/denoiser.hpp"
#include "oracle_noise/objective.hpp"
#include "oracle_noise/optimizer.hpp"
#include "oracle_noise/fixtures.hpp"
#include "oracle_noise/serialization.hpp"
#include "oracle_noise/config.hpp"
#include "oracle_noise/sweep.hpp"
#include "oracle_noise/commands.hpp"
#include "oracle_noise/verify.hpp"
