#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "ipcv/analysis.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace ipcv {
namespace {

using testing::random_matrix;
using testing::small_encoder;

CompressionConfig config(std::size_t lp, std::size_t keep, std::size_t window, std::size_t k) {
  CompressionConfig c;
  c.prune_layer = lp;
  c.retain = RetainCount{keep};
  c.as_window = window;
  c.neighbors = k;
  return c;
}

Matrix random_set(Rng& rng, std::size_t dim) {
  const std::size_t n = 1 + rng.uniform_index(20);
  Matrix m(n, dim);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

TEST(Hausdorff, Examples) {
  const Matrix a = random_matrix(7, 3, 1);
  EXPECT_EQ(hausdorff(a, a), 0.0);
  EXPECT_EQ(hausdorff(Matrix{{0.0}}, Matrix{{3.0}}), 3.0);
  EXPECT_THROW(hausdorff(Matrix(0, 3), a), ContractViolation);
  EXPECT_THROW(hausdorff(Matrix(2, 2), a), ContractViolation);
}

TEST(Hausdorff, AsymmetricDirectedParts) {
  const Matrix a{{0.0}}, b{{0.0}, {5.0}};
  EXPECT_EQ(directed_hausdorff(a, b), 0.0);
  EXPECT_EQ(directed_hausdorff(b, a), 5.0);
  EXPECT_EQ(hausdorff(a, b), 5.0);
}

TEST(Hausdorff, MatchesDoubleLoopOracle) {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix a = random_set(rng, 3), b = random_set(rng, 3);
    ASSERT_EQ(hausdorff(a, b), oracle::hausdorff(oracle::to_rows(a), oracle::to_rows(b)));
  }
}

TEST(Hausdorff, PseudometricAxioms) {
  Rng rng(18);
  for (int rep = 0; rep < 300; ++rep) {
    const Matrix a = random_set(rng, 2), b = random_set(rng, 2), c = random_set(rng, 2);
    const double ab = hausdorff(a, b);
    ASSERT_EQ(ab, hausdorff(b, a));
    ASSERT_EQ(hausdorff(a, a), 0.0);
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(hausdorff(a, c), ab + hausdorff(b, c) + 1e-12);
  }
}

TEST(Probes, SubsetProbeIsProperSubset) {
  Rng rng(1);
  const Matrix x = random_matrix(9, 4, 1);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix y = make_probe(x, rng, ProbeKind::subset);
    ASSERT_GE(y.rows(), 1u);
    ASSERT_LT(y.rows(), 9u);
    ASSERT_EQ(directed_hausdorff(y, x), 0.0);
  }
}

TEST(Probes, JitterProbeKeepsShape) {
  Rng rng(2);
  const Matrix x = random_matrix(9, 4, 1);
  const Matrix y = make_probe(x, rng, ProbeKind::jitter);
  EXPECT_EQ(y.rows(), 9u);
  EXPECT_NE(y, x);
}

TEST(Lipschitz, IdentityTailGivesOne) {
  const Encoder enc(small_encoder(1, 3));
  const Matrix x = random_matrix(8, 8, 1);
  Rng rng(5);
  EXPECT_NEAR(estimate_lipschitz(enc, x, 3, 20, rng, ProbeKind::subset), 1.0, 1e-9);
}

TEST(Lipschitz, SingleProbeEqualsHandRatio) {
  const Encoder enc(small_encoder(2, 4));
  const Matrix x = random_matrix(8, 8, 2);
  Rng a(9), b(9);
  const double est = estimate_lipschitz(enc, x, 1, 1, a);
  const Matrix y = make_probe(x, b);
  Matrix fx = x, fy = y;
  for (std::size_t l = 1; l < 4; ++l) {
    fx = oracle::from_rows(oracle::block(enc, l, oracle::to_rows(fx)), 8);
    fy = oracle::from_rows(oracle::block(enc, l, oracle::to_rows(fy)), 8);
  }
  const double hand = oracle::hausdorff(oracle::to_rows(fx), oracle::to_rows(fy)) /
                      oracle::hausdorff(oracle::to_rows(x), oracle::to_rows(y));
  EXPECT_NEAR(est, hand, 1e-10 * hand);
}

TEST(Lipschitz, NonDecreasingInProbeCount) {
  const Encoder enc(small_encoder(3, 4));
  const Matrix x = random_matrix(10, 8, 3);
  double prev = 0.0;
  for (std::size_t probes : {1u, 2u, 4u, 8u, 16u}) {
    Rng rng(4);
    const double est = estimate_lipschitz(enc, x, 2, probes, rng);
    EXPECT_GE(est, prev);
    prev = est;
  }
}

TEST(Lipschitz, DegenerateProbesFail) {
  const Encoder enc(small_encoder(3, 4));
  const Matrix x = random_matrix(1, 8, 3);
  Rng rng(4);
  EXPECT_THROW(estimate_lipschitz(enc, x, 2, 5, rng, ProbeKind::subset), EstimationFailed);
  EXPECT_THROW(estimate_lipschitz(enc, x, 2, 0, rng), ContractViolation);
}

TEST(Bounds, KeepAllIsEmpty) {
  const Encoder enc(small_encoder(4));
  const Matrix x = random_matrix(8, 8, 4);
  Rng rng(1);
  CompressionConfig c = config(1, 8, 1, 2);
  const BoundReport r = measure_reconstruction_error(enc, x, c, rng);
  EXPECT_EQ(r.removed, 0u);
  EXPECT_TRUE(r.per_token_err.empty());
  EXPECT_EQ(r.hausdorff_recon, 0.0);
  EXPECT_TRUE(r.satisfied.per_token);
}

TEST(Bounds, PerTokenErrorMatchesDifferencingOracle) {
  // Four blocks, prune at 3: the tail is the single block 3.
  const Encoder enc(small_encoder(5, 4));
  const Matrix x = random_matrix(8, 8, 5);
  Rng rng(2);
  const BoundReport r = measure_reconstruction_error(enc, x, config(3, 4, 0, 2), rng);

  oracle::Rows h = oracle::to_rows(x), prev;
  for (std::size_t l = 0; l < 4; ++l) {
    if (l == 3) prev = h;
    h = oracle::block(enc, l, h);
  }
  const oracle::PipelineResult p = oracle::ipcv(enc, x, 3, 4, 0, 2);
  ASSERT_EQ(r.per_token_err.size(), p.rem.size());
  for (std::size_t m = 0; m < p.rem.size(); ++m)
    EXPECT_NEAR(r.per_token_err[m], oracle::dist(p.final_full[p.rem[m]], h[p.rem[m]]), 1e-12);
}

TEST(Bounds, SignContractAndVerdictConsistency) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Encoder enc(small_encoder(seed, 5));
    const Matrix x = random_matrix(12, 8, seed);
    Rng rng(seed);
    const BoundReport r = measure_reconstruction_error(enc, x, config(2, 6, 2, 3), rng);
    EXPECT_GE(r.b, 0.0);
    EXPECT_GE(r.eps_bar_rho, 0.0);
    EXPECT_GE(r.tau_rho, 0.0);
    EXPECT_GE(r.alpha_hat, 0.0);
    for (double e : r.per_token_err) EXPECT_GE(e, 0.0);
    EXPECT_GE(r.l_hat_cert, r.l_hat);
    EXPECT_GE(r.l_hat_cert, r.l_hat_pair);
    EXPECT_EQ(r.bound_2b, 2.0 * r.b * (r.l_hat_cert + 1.0));
    EXPECT_GE(r.bound_2b_plus2, r.bound_2b);
    EXPECT_EQ(r.satisfied.per_token, r.max_err <= r.bound_2b);
    EXPECT_EQ(r.satisfied.hausdorff, r.hausdorff_recon <= r.bound_2b);
    EXPECT_EQ(r.satisfied.smooth, r.max_err <= r.bound_smooth);
    EXPECT_EQ(r.satisfied.intrinsic, r.max_err <= r.bound_intrinsic);
    EXPECT_TRUE(r.satisfied.per_token);
    EXPECT_TRUE(r.satisfied.hausdorff);
  }
}

TEST(Bounds, CoveringRadiusAndScoreShrinkWithRetention) {
  const Encoder enc(small_encoder(6, 5));
  const Matrix x = random_matrix(20, 8, 6);
  double prev_eps = std::numeric_limits<double>::infinity();
  double prev_tau = prev_eps;
  for (std::size_t keep = 3; keep < 20; ++keep) {
    Rng rng(1);
    const BoundReport r = measure_reconstruction_error(enc, x, config(2, keep, 1, 3), rng,
                                                       BoundOptions{1, false, ProbeKind::subset});
    EXPECT_LE(r.eps_bar_rho, prev_eps);
    EXPECT_LE(r.tau_rho, prev_tau);
    prev_eps = r.eps_bar_rho;
    prev_tau = r.tau_rho;
  }
}

SyntheticInputSpec clustered(std::uint64_t seed, double spread) {
  SyntheticInputSpec s;
  s.num_tokens = 32;
  s.num_clusters = 4;
  s.cluster_spread = spread;
  s.seed = seed;
  return s;
}

TEST(Smoothness, ListsAndMedians) {
  const Encoder enc(small_encoder(7, 6));
  const Matrix x = make_synthetic_input(clustered(7, 0.1), 8);
  Rng rng(3);
  const SmoothnessStats st = delta_smoothness_stats(enc, x, config(2, 16, 0, 4), rng);
  ASSERT_EQ(st.tokens.size(), 16u);
  ASSERT_EQ(st.neighbor_l1.size(), 16u);
  ASSERT_EQ(st.random_cos.size(), 16u);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_TRUE(std::isfinite(st.neighbor_l1[i]));
    EXPECT_GE(st.neighbor_l1[i], 0.0);
    EXPECT_GE(st.random_l1[i], 0.0);
    EXPECT_LE(std::abs(st.neighbor_cos[i]), 1.0);
    EXPECT_LE(std::abs(st.random_cos[i]), 1.0);
  }
  auto sorted = st.random_l1;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(st.median_random_l1, sorted[(sorted.size() - 1) / 2]);
  sorted = st.neighbor_cos;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(st.median_neighbor_cos, sorted[(sorted.size() - 1) / 2]);
  EXPECT_LE(st.median_neighbor_l1, st.median_random_l1);
}

TEST(Smoothness, ZeroSpreadGivesExactZeroForSameClusterNeighbors) {
  const Encoder enc(small_encoder(8, 6));
  const Matrix x = make_synthetic_input(clustered(8, 0.0), 8);
  Rng rng(3);
  // Each cluster has 8 identical tokens; k=2 with 30 kept guarantees the
  // nearest kept tokens are exact twins of every removed token.
  const SmoothnessStats st = delta_smoothness_stats(enc, x, config(2, 30, 0, 2), rng);
  ASSERT_EQ(st.neighbor_l1.size(), 2u);
  for (double v : st.neighbor_l1) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(st.median_neighbor_l1, 0.0);
}

TEST(Perturbation, KeepAllIsZero) {
  const Encoder enc(small_encoder(9));
  const Matrix x = random_matrix(8, 8, 9);
  const PerturbationResult r =
      final_output_perturbation(enc, x, config(1, 8, 1, 2), DownstreamStrategy::norm_topk, 8);
  EXPECT_EQ(r.pre_llm, 0.0);
  EXPECT_EQ(r.delta_llm, 0.0);
  EXPECT_EQ(r.combined, 0.0);
  EXPECT_TRUE(r.triangle_holds);
}

TEST(Perturbation, TriangleHoldsAndPrefixDeltaMatchesOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Encoder enc(small_encoder(seed, 4));
    const Matrix x = random_matrix(12, 8, seed + 7);
    const CompressionConfig c = config(1, 6, 2, 3);
    const PerturbationResult r =
        final_output_perturbation(enc, x, c, DownstreamStrategy::keep_prefix, 5);
    EXPECT_TRUE(r.triangle_holds);
    const auto full = oracle::to_rows(run_ipcv(enc, x, c).final_full);
    const oracle::Rows prefix(full.begin(), full.begin() + 5);
    EXPECT_EQ(r.delta_llm, oracle::hausdorff(full, prefix));
  }
}

}  // namespace
}  // namespace ipcv
