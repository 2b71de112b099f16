#pragma once

// Token sequences, text encoders and token weighting by representational
// collapse. A token's impact score is how far the sentence embedding moves
// (1 − cosine) when that token is replaced with PAD. Scores are then
// rescaled into [w_min, w_max].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "oracle_noise/errors.hpp"
#include "oracle_noise/linalg.hpp"
#include "oracle_noise/random.hpp"

namespace oracle_noise {

/// A pre-tokenized prompt. special_mask marks BOS/EOS/PAD and any other
/// token that must never receive optimization weight.
struct TokenSequence {
  std::vector<std::uint32_t> ids;
  std::vector<bool> special_mask;
  std::uint32_t pad_id = 0;

  std::size_t size() const noexcept { return ids.size(); }
  bool is_valid(std::size_t j) const noexcept { return j < ids.size() && !special_mask[j]; }

  std::vector<std::size_t> valid_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (!special_mask[j]) out.push_back(j);
    return out;
  }

  void validate() const {
    if (ids.empty()) throw InvalidArgument("token sequence is empty");
    if (special_mask.size() != ids.size()) throw InvalidArgument("special_mask length differs from ids length");
  }

  /// The all-PAD sequence of length n used as the unconditional prompt.
  static TokenSequence null_prompt(std::size_t n, std::uint32_t pad_id) {
    return TokenSequence{std::vector<std::uint32_t>(n, pad_id), std::vector<bool>(n, true), pad_id};
  }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

struct SentenceEmbedding {
  std::vector<double> values;
  std::string encoder_id;
};

/// One embedding row per token, n × d_text.
struct TokenEmbeddingMatrix {
  Matrix rows;

  std::size_t tokens() const noexcept { return rows.rows; }
  std::size_t dimension() const noexcept { return rows.cols; }
};

/// Interface every text encoder implements. Implementations must be
/// deterministic and immutable after construction.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual SentenceEmbedding encode_sentence(const TokenSequence& tokens) const = 0;
  virtual TokenEmbeddingMatrix encode_tokens(const TokenSequence& tokens) const = 0;
};

using EncoderPtr = std::shared_ptr<const TextEncoder>;
using EncoderList = std::vector<EncoderPtr>;

/// Encoder backed by an explicit vocabulary table. Token rows are the table
/// row plus an optional sinusoidal positional code; the sentence embedding is
/// the mean over every position (PAD positions included), renormalized to
/// unit length.
class TableEncoder final : public TextEncoder {
 public:
  TableEncoder(Matrix table, double positional_scale, std::string id)
      : table_(std::move(table)), positional_scale_(positional_scale), id_(std::move(id)) {
    if (table_.rows < 1 || table_.cols < 1) throw InvalidArgument("encoder table must be non-empty");
  }

  std::string id() const override { return id_; }
  std::size_t dimension() const override { return table_.cols; }
  std::size_t vocab_size() const noexcept { return table_.rows; }
  const Matrix& table() const noexcept { return table_; }

  TokenEmbeddingMatrix encode_tokens(const TokenSequence& tokens) const override {
    tokens.validate();
    const std::size_t d = table_.cols;
    TokenEmbeddingMatrix out{Matrix(tokens.size(), d)};
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      const std::uint32_t id = tokens.ids[p];
      if (id >= table_.rows) throw InvalidToken("token id " + std::to_string(id) + " outside vocabulary");
      auto row = out.rows.row(p);
      const auto src = table_.row(id);
      for (std::size_t k = 0; k < d; ++k) row[k] = src[k] + positional_scale_ * positional_code(p, k, d);
    }
    return out;
  }

  SentenceEmbedding encode_sentence(const TokenSequence& tokens) const override {
    const auto rows = encode_tokens(tokens);
    std::vector<double> mean(rows.dimension(), 0.0);
    for (std::size_t p = 0; p < rows.tokens(); ++p) {
      const auto row = rows.rows.row(p);
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
    }
    const double n = norm(mean);
    if (n > 0.0)
      for (double& v : mean) v /= n;
    return {std::move(mean), id_};
  }

  static double positional_code(std::size_t position, std::size_t k, std::size_t d) {
    const double freq = std::pow(10000.0, -static_cast<double>(k - k % 2) / static_cast<double>(d));
    const double angle = static_cast<double>(position) * freq;
    return (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }

 private:
  Matrix table_;
  double positional_scale_;
  std::string id_;
};

inline constexpr double kToyPositionalScale = 0.1;

/// Deterministic stand-in for a pretrained text encoder: each token id maps to
/// a frozen random unit vector drawn from the seed.
inline EncoderPtr toy_encoder(std::uint64_t seed, std::size_t d_text, std::size_t vocab_size) {
  if (d_text < 4) throw InvalidArgument("toy encoder: d_text must be at least 4");
  if (vocab_size < 2) throw InvalidArgument("toy encoder: vocab_size must be at least 2");
  Matrix table(vocab_size, d_text);
  NormalSampler sampler(mix_seed(seed, 0x70E));
  for (std::size_t v = 0; v < vocab_size; ++v) {
    auto row = table.row(v);
    sampler.fill(row);
    const double n = norm(row);
    for (double& x : row) x /= n;
  }
  return std::make_shared<TableEncoder>(std::move(table), kToyPositionalScale, "toy-" + std::to_string(seed));
}

inline SentenceEmbedding encode_sentence(const TextEncoder& encoder, const TokenSequence& tokens) {
  return encoder.encode_sentence(tokens);
}

inline TokenEmbeddingMatrix encode_tokens(const TextEncoder& encoder, const TokenSequence& tokens) {
  return encoder.encode_tokens(tokens);
}

/// Cosine similarity; defined as 0 when either vector has norm below 1e-15.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("cosine_similarity: dimension mismatch");
  const double na = norm(a);
  const double nb = norm(b);
  if (na < 1e-15 || nb < 1e-15) return 0.0;
  return dot(a, b) / (na * nb);
}

/// Replaces token j with PAD and marks it special; length is unchanged.
inline TokenSequence lesion(const TokenSequence& tokens, std::size_t j) {
  tokens.validate();
  if (!tokens.is_valid(j)) throw InvalidIndex("cannot lesion position " + std::to_string(j) + ": not a valid token");
  TokenSequence out = tokens;
  out.ids[j] = tokens.pad_id;
  out.special_mask[j] = true;
  return out;
}

struct ImpactVector {
  std::vector<double> scores;
  std::vector<bool> valid;
};

/// I[j] = mean over encoders of 1 − cos(E_k, E_k with token j lesioned).
inline ImpactVector impact_scores(const TokenSequence& tokens, const EncoderList& encoders) {
  tokens.validate();
  if (encoders.empty()) throw InvalidArgument("impact_scores: at least one encoder required");
  const auto valid = tokens.valid_indices();
  if (valid.empty()) throw EmptyValidSet("prompt has no valid (non-special) tokens");

  ImpactVector out{std::vector<double>(tokens.size(), 0.0), std::vector<bool>(tokens.size(), false)};
  std::vector<SentenceEmbedding> base;
  base.reserve(encoders.size());
  for (const auto& enc : encoders) base.push_back(enc->encode_sentence(tokens));

  for (std::size_t j : valid) {
    const TokenSequence lesioned = lesion(tokens, j);
    double acc = 0.0;
    for (std::size_t k = 0; k < encoders.size(); ++k) {
      const auto e = encoders[k]->encode_sentence(lesioned);
      acc += 1.0 - cosine_similarity(base[k].values, e.values);
    }
    out.scores[j] = acc / static_cast<double>(encoders.size());
    out.valid[j] = true;
  }
  return out;
}

struct WeightVector {
  std::vector<double> weights;
  double w_min = 0.0;
  double w_max = 0.0;

  std::size_t size() const noexcept { return weights.size(); }
};

/// Min–max rescaling of valid impact scores onto [w_min, w_max]; ties map to
/// the midpoint and special positions get weight 0.
inline WeightVector affine_normalize(const ImpactVector& impact, double w_min, double w_max) {
  if (!(w_min < w_max)) throw InvalidBounds("weight bounds require w_min < w_max");
  if (impact.valid.size() != impact.scores.size()) throw InvalidArgument("impact vector mask length mismatch");
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (std::size_t j = 0; j < impact.scores.size(); ++j) {
    if (!impact.valid[j]) continue;
    const double s = impact.scores[j];
    lo = any ? std::min(lo, s) : s;
    hi = any ? std::max(hi, s) : s;
    any = true;
  }
  if (!any) throw EmptyValidSet("affine_normalize: no valid positions");

  WeightVector out{std::vector<double>(impact.scores.size(), 0.0), w_min, w_max};
  const double midpoint = 0.5 * (w_min + w_max);
  for (std::size_t j = 0; j < impact.scores.size(); ++j) {
    if (!impact.valid[j]) continue;
    if (hi == lo) {
      out.weights[j] = midpoint;
    } else {
      const double w = w_min + (impact.scores[j] - lo) * (w_max - w_min) / (hi - lo);
      out.weights[j] = std::clamp(w, w_min, w_max);
    }
  }
  return out;
}

/// Indicator weights: `value` on valid tokens, 0 on specials.
inline WeightVector uniform_weights(const TokenSequence& tokens, double value = 1.0) {
  WeightVector out{std::vector<double>(tokens.size(), 0.0), value, value};
  for (std::size_t j = 0; j < tokens.size(); ++j)
    if (tokens.is_valid(j)) out.weights[j] = value;
  return out;
}

/// Convenience whitespace tokenizer: BOS=1, words hashed (FNV-1a) into
/// [3, vocab_size), EOS=2, then PAD=0 up to `length`.
inline TokenSequence tokenize_words(std::string_view text, std::size_t vocab_size, std::size_t length) {
  if (vocab_size < 4) throw InvalidArgument("tokenize_words: vocab_size must be at least 4");
  constexpr std::uint32_t pad = 0, bos = 1, eos = 2;
  TokenSequence out;
  out.pad_id = pad;
  out.ids.push_back(bos);
  out.special_mask.push_back(true);
  std::istringstream words{std::string(text)};
  std::string word;
  while (words >> word) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : word) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    out.ids.push_back(static_cast<std::uint32_t>(3 + h % (vocab_size - 3)));
    out.special_mask.push_back(false);
  }
  out.ids.push_back(eos);
  out.special_mask.push_back(true);
  if (out.ids.size() > length) throw InvalidArgument("prompt longer than requested sequence length");
  while (out.ids.size() < length) {
    out.ids.push_back(pad);
    out.special_mask.push_back(true);
  }
  return out;
}

}  // namespace oracle_noise
