#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "ipcv/encoder.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace ipcv {
namespace {

using testing::random_matrix;
using testing::small_encoder;

TEST(EncoderConfig, Validation) {
  EncoderConfig c = small_encoder(0);
  EXPECT_NO_THROW(c.validate());
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_encoder(0);
  c.depth = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_encoder(0);
  c.eps = 0.0;
  EXPECT_THROW(Encoder{c}, ConfigError);
}

TEST(Encoder, WeightsAreSeededAndBounded) {
  const Encoder a(small_encoder(5)), b(small_encoder(5)), c(small_encoder(6));
  EXPECT_EQ(a.block(2).w1, b.block(2).w1);
  EXPECT_NE(a.block(2).w1, c.block(2).w1);
  const double limit = std::sqrt(6.0 / (8.0 + 16.0));
  for (double v : a.block(0).w1.data()) EXPECT_LE(std::abs(v), limit);
  EXPECT_EQ(a.block(0).w2.rows(), 16u);
  EXPECT_EQ(a.block(1).ln1_gain, Vector(8, 1.0));
}

TEST(Encoder, DeeperEncoderSharesLeadingBlocks) {
  const Encoder shallow(small_encoder(3, 2)), deep(small_encoder(3, 6));
  EXPECT_EQ(shallow.block(1).wq, deep.block(1).wq);
}

TEST(Encoder, BlockMatchesOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Encoder enc(small_encoder(seed, 3, 12, seed % 2 ? 3 : 4));
    const Matrix h = random_matrix(7, 12, seed + 100);
    const auto expect = oracle::block(enc, 1, oracle::to_rows(h));
    EXPECT_LE(oracle::max_abs_diff(enc.block_forward(1, h), expect), 1e-12);
  }
}

TEST(Encoder, QueryRowsSelectRowsOfFullAttention) {
  const Encoder enc(small_encoder(1));
  const Matrix h = random_matrix(9, 8, 2);
  const Matrix full = enc.attention_sublayer(0, h);
  const std::vector<std::size_t> q{1, 4, 8};
  const Matrix part = enc.attention_sublayer(0, h, std::span<const std::size_t>(q));
  EXPECT_EQ(part, gather_rows(full, q));
}

TEST(Encoder, PermutationEquivariant) {
  const Encoder enc(small_encoder(4));
  const Matrix h = random_matrix(10, 8, 5);
  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(8);
  for (std::size_t i = perm.size() - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_index(i + 1)]);
  const Matrix out = forward_full(enc, h).back();
  const Matrix out_perm = forward_full(enc, gather_rows(h, perm)).back();
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(out_perm(i, j), out(perm[i], j), 1e-12);
}

TEST(Forward, TraceShapeAndIndexing) {
  const Encoder enc(small_encoder(0, 5));
  const Matrix x = random_matrix(6, 8, 1);
  const LayerTrace t = forward_full(enc, x);
  ASSERT_EQ(t.states.size(), 6u);
  EXPECT_EQ(t.at_layer(0), x);
  EXPECT_EQ(t.at_layer(3), enc.block_forward(2, t.at_layer(2)));
  EXPECT_THROW(t.at_layer(6), ContractViolation);
}

TEST(Forward, SubsetTraceStartsAtInput) {
  const Encoder enc(small_encoder(0, 5));
  const Matrix x = random_matrix(6, 8, 1);
  const LayerTrace t = forward_subset(enc, x, 2, 4);
  EXPECT_EQ(t.first_layer, 2u);
  EXPECT_EQ(t.states.size(), 3u);
  EXPECT_EQ(t.at_layer(2), x);
  EXPECT_THROW(forward_subset(enc, x, 3, 2), ContractViolation);
  EXPECT_THROW(forward_subset(enc, x, 0, 6), ContractViolation);
  EXPECT_THROW(forward_subset(enc, Matrix(3, 7), 0, 1), ContractViolation);
}

TEST(Forward, Deterministic) {
  const Encoder enc(small_encoder(7));
  const Matrix x = random_matrix(5, 8, 1);
  EXPECT_EQ(forward_full(enc, x).back(), forward_full(Encoder(small_encoder(7)), x).back());
}

TEST(Forward, SingleTokenIsWellDefined) {
  const Encoder enc(small_encoder(2));
  EXPECT_TRUE(forward_full(enc, random_matrix(1, 8, 3)).back().all_finite());
}

TEST(SyntheticInput, ShapeClustersAndDeterminism) {
  SyntheticInputSpec s;
  s.num_tokens = 20;
  s.num_clusters = 4;
  s.cluster_spread = 0.0;
  s.seed = 11;
  const Matrix x = make_synthetic_input(s, 6);
  ASSERT_EQ(x.rows(), 20u);
  ASSERT_EQ(x.cols(), 6u);
  for (std::size_t i = 4; i < 20; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(x(i, j), x(i % 4, j));
  EXPECT_NE(x(0, 0), x(1, 0));
  EXPECT_EQ(make_synthetic_input(s, 6), x);
}

TEST(Forward, DepthOneTraceHasTwoStates) {
  const Encoder enc(small_encoder(0, 1));
  const LayerTrace t = forward_full(enc, random_matrix(3, 8, 4));
  EXPECT_EQ(t.states.size(), 2u);
}

TEST(Forward, EmptyRangeIsIdentity) {
  const Encoder enc(small_encoder(0));
  const Matrix x = random_matrix(3, 8, 4);
  EXPECT_EQ(forward_subset(enc, x, 2, 2).back(), x);
}

TEST(Forward, SubsetOverFullRangeMatchesFullTrace) {
  const Encoder enc(small_encoder(9));
  const Matrix x = random_matrix(6, 8, 3);
  const LayerTrace full = forward_full(enc, x);
  EXPECT_EQ(forward_subset(enc, full.at_layer(1), 1, 4).states,
            std::vector<Matrix>(full.states.begin() + 1, full.states.end()));
}

TEST(Forward, SingleTokenMatchesHandSteppedOracle) {
  const Encoder enc(small_encoder(6));
  const Matrix x = random_matrix(1, 8, 8);
  const auto expect = oracle::block(enc, 0, oracle::to_rows(x));
  EXPECT_LE(oracle::max_abs_diff(forward_subset(enc, x, 0, 1).back(), expect), 1e-10);
}

TEST(SyntheticInput, OneClusterPerTokenGivesDistinctRows) {
  SyntheticInputSpec s;
  s.num_tokens = 10;
  s.num_clusters = 10;
  s.cluster_spread = 0.0;
  const Matrix x = make_synthetic_input(s, 4);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j) EXPECT_GT(l2_distance(x.row(i), x.row(j)), 0.0);
}

TEST(SyntheticInput, SpreadControlsJitter) {
  SyntheticInputSpec s;
  s.num_tokens = 400;
  s.num_clusters = 1;
  s.cluster_spread = 0.3;
  const Matrix x = make_synthetic_input(s, 4);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double d = x(i, 0) - x(0, 0);
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(x.rows());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd, 0.3, 0.05);
}

TEST(SyntheticInput, Validation) {
  SyntheticInputSpec s;
  s.num_tokens = 3;
  s.num_clusters = 4;
  EXPECT_THROW(make_synthetic_input(s, 4), ConfigError);
  s.num_tokens = 8;
  s.cluster_spread = -1.0;
  EXPECT_THROW(make_synthetic_input(s, 4), ConfigError);
}

}  // namespace
}  // namespace ipcv
