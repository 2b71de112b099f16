#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracle_noise/encoding.hpp"
#include "oracle_noise/fixtures.hpp"
#include "oracle_noise/verify.hpp"

using namespace oracle_noise;

namespace {

TokenSequence prompt(std::vector<std::uint32_t> ids, std::vector<bool> mask) { return {std::move(ids), std::move(mask), 0}; }

}  // namespace

TEST(TokenSequence, ValidIndicesAndValidation) {
  const auto t = fixture_prompt();
  EXPECT_EQ(t.valid_indices(), (std::vector<std::size_t>{1, 2, 3, 4, 5}));
  EXPECT_THROW((TokenSequence{{1, 2}, {false}, 0}).validate(), InvalidArgument);
  const auto null = TokenSequence::null_prompt(5, 0);
  EXPECT_TRUE(null.valid_indices().empty());
  EXPECT_TRUE(std::all_of(null.ids.begin(), null.ids.end(), [](auto id) { return id == 0; }));
}

TEST(ToyEncoder, SentenceEmbeddingProperties) {
  const auto enc = toy_encoder(11, 16, 64);
  const auto t = fixture_prompt();
  const auto a = enc->encode_sentence(t);
  EXPECT_EQ(a.values, enc->encode_sentence(t).values);
  EXPECT_NEAR(norm(a.values), 1.0, 1e-12);

  auto changed = t;
  changed.ids[2] = 30;
  EXPECT_LT(cosine_similarity(a.values, enc->encode_sentence(changed).values), 1.0 - 1e-6);

  const auto null = enc->encode_sentence(TokenSequence::null_prompt(10, 0));
  EXPECT_GT(norm(null.values), 0.0);
  EXPECT_TRUE(std::all_of(null.values.begin(), null.values.end(), [](double v) { return std::isfinite(v); }));
}

TEST(ToyEncoder, SeedsControlOutputs) {
  const auto t = fixture_prompt();
  EXPECT_EQ(toy_encoder(3, 16, 64)->encode_sentence(t).values, toy_encoder(3, 16, 64)->encode_sentence(t).values);
  EXPECT_NE(toy_encoder(3, 16, 64)->encode_sentence(t).values, toy_encoder(4, 16, 64)->encode_sentence(t).values);
  EXPECT_THROW(toy_encoder(1, 2, 64), InvalidArgument);
}

TEST(ToyEncoder, TokenRows) {
  const auto enc = toy_encoder(11, 16, 64);
  const auto t = prompt({1, 10, 20, 2, 0, 0}, {true, false, false, true, true, true});
  const auto rows = enc->encode_tokens(t);
  EXPECT_EQ(rows.tokens(), 6u);
  EXPECT_EQ(rows.dimension(), 16u);

  // Swapping two distinct tokens moves their identity but not the positional code.
  auto swapped = t;
  std::swap(swapped.ids[1], swapped.ids[2]);
  const auto rows_swapped = enc->encode_tokens(swapped);
  EXPECT_NE(std::vector<double>(rows.rows.row(1).begin(), rows.rows.row(1).end()),
            std::vector<double>(rows_swapped.rows.row(2).begin(), rows_swapped.rows.row(2).end()));
  for (std::size_t r : {0u, 3u, 4u, 5u})
    for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(rows.rows(r, k), rows_swapped.rows(r, k));

  // PAD rows are the PAD table row plus the positional code.
  const auto& table = std::static_pointer_cast<const TableEncoder>(enc)->table();
  for (std::size_t k = 0; k < 16; ++k) {
    const double pos4 = rows.rows(4, k) - table(0, k);
    const double pos5 = rows.rows(5, k) - table(0, k);
    EXPECT_NEAR(pos4, kToyPositionalScale * TableEncoder::positional_code(4, k, 16), 1e-15);
    EXPECT_NEAR(pos5, kToyPositionalScale * TableEncoder::positional_code(5, k, 16), 1e-15);
  }
}

TEST(Lesion, ReplacesWithPad) {
  const auto t = fixture_prompt();
  const auto l = lesion(t, 3);
  EXPECT_EQ(l.size(), t.size());
  EXPECT_EQ(l.ids[3], t.pad_id);
  EXPECT_TRUE(l.special_mask[3]);
  EXPECT_THROW(lesion(t, 8), InvalidIndex);
  EXPECT_THROW(lesion(t, 0), InvalidIndex);
  EXPECT_THROW(lesion(t, 40), InvalidIndex);
}

TEST(ImpactScores, PadLikeTokenHasZeroImpact) {
  Matrix table(3, 3);
  table(1, 0) = 1.0;  // token 2 shares PAD's zero row
  const EncoderList enc{std::make_shared<TableEncoder>(table, 0.0, "t")};
  const auto impact = impact_scores(prompt({1, 2}, {false, false}), enc);
  EXPECT_EQ(impact.scores[1], 0.0);
  EXPECT_GT(impact.scores[0], 0.0);
}

TEST(ImpactScores, DuplicateEncodersAverageToSingle) {
  const auto e = toy_encoder(11, 16, 64);
  const auto t = fixture_prompt();
  const auto one = impact_scores(t, {e});
  const auto two = impact_scores(t, {e, e});
  for (std::size_t j = 0; j < t.size(); ++j) EXPECT_NEAR(one.scores[j], two.scores[j], 1e-15);
}

TEST(ImpactScores, HandFixture) {
  const EncoderList enc{verify::hand_fixture_encoder()};
  const auto impact = impact_scores(prompt({1, 2, 3, 4}, {false, false, false, false}), enc);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(impact.scores[j], verify::kHandImpact[j], 1e-14);
  for (int j = 0; j < 3; ++j) EXPECT_GT(impact.scores[3], impact.scores[j]);
  const auto w = affine_normalize(impact, 0.5, 3.0);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(w.weights[j], verify::kHandWeights[j], 1e-14);
}

TEST(ImpactScores, Errors) {
  const auto e = toy_encoder(1, 8, 16);
  EXPECT_THROW(impact_scores(TokenSequence::null_prompt(4, 0), {e}), EmptyValidSet);
  EXPECT_THROW(impact_scores(fixture_prompt(), {}), InvalidArgument);
}

TEST(ImpactScores, PermutationConsistent) {
  const EncoderList enc{verify::hand_fixture_encoder()};
  const auto a = impact_scores(prompt({1, 2, 3, 4}, {false, false, false, false}), enc);
  const auto b = impact_scores(prompt({4, 3, 2, 1}, {false, false, false, false}), enc);
  // Without a positional code, mean pooling is order free.
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(a.scores[j], b.scores[3 - j], 1e-15);
}

TEST(AffineNormalize, Examples) {
  const ImpactVector two{{0.1, 0.4}, {true, true}};
  const auto w = affine_normalize(two, 0.5, 3.0);
  EXPECT_DOUBLE_EQ(w.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(w.weights[1], 3.0);

  const ImpactVector ties{{0.2, 0.2, 0.9}, {true, true, false}};
  const auto t = affine_normalize(ties, 0.5, 3.0);
  EXPECT_EQ(t.weights[0], 1.75);
  EXPECT_EQ(t.weights[1], 1.75);
  EXPECT_EQ(t.weights[2], 0.0);

  EXPECT_THROW(affine_normalize(two, 3.0, 3.0), InvalidBounds);
  EXPECT_THROW(affine_normalize(two, 3.0, 0.5), InvalidBounds);
}

TEST(AffineNormalize, WeightsWithinBounds) {
  const auto t = fixture_prompt();
  const auto w = affine_normalize(impact_scores(t, fixture_encoders()), 0.5, 3.0);
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t.is_valid(j)) {
      EXPECT_GE(w.weights[j], 0.5);
      EXPECT_LE(w.weights[j], 3.0);
    } else {
      EXPECT_EQ(w.weights[j], 0.0);
    }
  }
}

TEST(TokenizeWords, Layout) {
  const auto t = tokenize_words("a red cube", 64, 8);
  EXPECT_EQ(t.size(), 8u);
  EXPECT_EQ(t.ids.front(), 1u);
  EXPECT_EQ(t.ids[4], 2u);
  EXPECT_EQ(t.valid_indices(), (std::vector<std::size_t>{1, 2, 3}));
  for (std::size_t j = 1; j < 4; ++j) {
    EXPECT_GE(t.ids[j], 3u);
    EXPECT_LT(t.ids[j], 64u);
  }
  EXPECT_EQ(tokenize_words("a red cube", 64, 8).ids, t.ids);
  EXPECT_THROW(tokenize_words("one two three four", 64, 4), InvalidArgument);
}
