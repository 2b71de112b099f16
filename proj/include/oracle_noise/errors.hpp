#pragma once

#include <stdexcept>
#include <string>

namespace oracle_noise {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ORACLE_NOISE_DEFINE_ERROR(Name)   \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

ORACLE_NOISE_DEFINE_ERROR(InvalidLatent);
ORACLE_NOISE_DEFINE_ERROR(ZeroLatent);
ORACLE_NOISE_DEFINE_ERROR(DegenerateGradient);
ORACLE_NOISE_DEFINE_ERROR(ShapeMismatch);
ORACLE_NOISE_DEFINE_ERROR(InvalidIndex);
ORACLE_NOISE_DEFINE_ERROR(InvalidToken);
ORACLE_NOISE_DEFINE_ERROR(EmptyValidSet);
ORACLE_NOISE_DEFINE_ERROR(InvalidBounds);
ORACLE_NOISE_DEFINE_ERROR(DegenerateFeatures);
ORACLE_NOISE_DEFINE_ERROR(InvalidArgument);
ORACLE_NOISE_DEFINE_ERROR(FormatError);

#undef ORACLE_NOISE_DEFINE_ERROR

}  // namespace oracle_noise
