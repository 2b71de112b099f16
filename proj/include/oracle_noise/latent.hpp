#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oracle_noise/errors.hpp"
#include "oracle_noise/linalg.hpp"

namespace oracle_noise {

/// (channels, height, width) layout of a latent. Values are stored
/// channel-major: index = channel * height * width + position.
struct Shape {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;

  std::size_t positions() const noexcept { return std::size_t{height} * width; }
  std::size_t size() const noexcept { return std::size_t{channels} * positions(); }

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// A D-dimensional real vector with shape metadata; the optimization variable.
class Latent {
 public:
  Latent(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
    if (shape_.size() != values_.size()) {
      throw InvalidLatent("latent shape product " + std::to_string(shape_.size()) + " does not match " +
                          std::to_string(values_.size()) + " values");
    }
    if (values_.size() < 2) throw InvalidLatent("latent dimension must be at least 2");
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
      throw InvalidLatent("latent contains non-finite values");
    }
  }

  static Latent zeros(Shape shape) { return Latent(shape, std::vector<double>(shape.size(), 0.0)); }

  /// Flat vector with shape (1, 1, D).
  static Latent from_values(std::vector<double> values) {
    const auto d = static_cast<std::uint32_t>(values.size());
    return Latent(Shape{1, 1, d}, std::move(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  double norm() const noexcept { return oracle_noise::norm(values_); }

  friend bool operator==(const Latent&, const Latent&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// a + scale * b
inline Latent axpy(const Latent& a, double scale, std::span<const double> b) {
  if (b.size() != a.size()) throw ShapeMismatch("axpy: dimension mismatch");
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * b[i];
  return Latent(a.shape(), std::move(out));
}

// Binary format: "ORCL", version 0x01, channels/height/width as u32 LE,
// then D doubles LE.

inline constexpr std::array<char, 4> kLatentMagic{'O', 'R', 'C', 'L'};
inline constexpr std::uint8_t kLatentVersion = 0x01;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

inline std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_latent(const Latent& z) {
  std::vector<unsigned char> out;
  out.reserve(17 + 8 * z.size());
  out.insert(out.end(), kLatentMagic.begin(), kLatentMagic.end());
  out.push_back(kLatentVersion);
  detail::put_u32(out, z.shape().channels);
  detail::put_u32(out, z.shape().height);
  detail::put_u32(out, z.shape().width);
  for (double v : z.values()) detail::put_f64(out, v);
  return out;
}

inline Latent decode_latent(std::span<const unsigned char> bytes) {
  constexpr std::size_t header = 4 + 1 + 12;
  if (bytes.size() < header) throw FormatError("latent file truncated: header incomplete");
  if (!std::equal(kLatentMagic.begin(), kLatentMagic.end(), bytes.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw FormatError("latent file: bad magic");
  }
  if (bytes[4] != kLatentVersion) throw FormatError("latent file: unsupported version " + std::to_string(bytes[4]));
  Shape shape{static_cast<std::uint32_t>(detail::get_le(&bytes[5], 4)),
              static_cast<std::uint32_t>(detail::get_le(&bytes[9], 4)),
              static_cast<std::uint32_t>(detail::get_le(&bytes[13], 4))};
  if (bytes.size() != header + 8 * shape.size()) {
    throw FormatError("latent file: payload size does not match shape");
  }
  std::vector<double> values(shape.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t bits = detail::get_le(&bytes[header + 8 * i], 8);
    std::memcpy(&values[i], &bits, sizeof bits);
  }
  return Latent(shape, std::move(values));
}

inline void write_latent(const std::filesystem::path& path, const Latent& z) {
  const auto bytes = encode_latent(z);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

inline Latent read_latent(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_latent(bytes);
}

}  // namespace oracle_noise
