#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ssp/common/error.hpp"
#include "ssp/common/rng.hpp"
#include "ssp/losses/central_dir.hpp"
#include "support/oracles.hpp"

namespace ssp::loss {
namespace {

using Vecs = std::vector<std::vector<double>>;

double dotp(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Vecs unit_basis(std::size_t k, std::size_t dim) {
  Vecs v(k, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < k; ++i) v[i][i] = 1.0;
  return v;
}

TEST(CentralDir, OrthogonalPairBisects) {
  CentralDirState state;
  const auto g = unit_basis(2, 4);
  const auto r = central_dir_weights(g, {}, state);
  const auto oracle = ssp::testing::simplex_grid_min(g);
  EXPECT_NEAR(r.weights[0], oracle[0], 1e-6);
  EXPECT_NEAR(r.weights[1], oracle[1], 1e-6);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(r.combined[0], r.combined[1], 1e-12);
  EXPECT_GT(r.combined[0], 0);
  EXPECT_FALSE(r.degenerate);
}

TEST(CentralDir, OrthogonalTripleIsUniform) {
  CentralDirState state;
  const auto g = unit_basis(3, 5);
  const auto r = central_dir_weights(g, {}, state);
  const auto oracle = ssp::testing::simplex_grid_min(g);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.weights[i], oracle[i], 1e-6);
    EXPECT_NEAR(r.weights[i], 1.0 / 3, 1e-6);
  }
}

TEST(CentralDir, IdenticalGradientsTieBreakToHalf) {
  CentralDirState state;
  const Vecs g{{1, 2, 3}, {1, 2, 3}};
  const auto r = central_dir_weights(g, {}, state);
  EXPECT_DOUBLE_EQ(r.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(r.weights[1], 0.5);
}

TEST(CentralDir, MinNormMatchesOracleOnRandomPairs) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    Vecs g(2, std::vector<double>(6));
    for (auto& v : g) {
      for (auto& x : v) x = uniform(rng, -1, 1);
      const double n = std::sqrt(dotp(v, v));
      for (auto& x : v) x /= n;
    }
    const auto w = min_norm_weights(g, {});
    const auto oracle = ssp::testing::simplex_grid_min(g);
    EXPECT_NEAR(w[0], oracle[0], 1e-6) << trial;
  }
}

TEST(CentralDir, MinNormMatchesOracleOnRandomTriples) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    Vecs g(3, std::vector<double>(6));
    for (auto& v : g) {
      for (auto& x : v) x = uniform(rng, -1, 1);
      const double n = std::sqrt(dotp(v, v));
      for (auto& x : v) x /= n;
    }
    const auto w = min_norm_weights(g, {});
    const auto oracle = ssp::testing::simplex_grid_min(g);
    // Near-flat optima pin the objective much tighter than the weights.
    EXPECT_NEAR(ssp::testing::combo_norm2(g, w), ssp::testing::combo_norm2(g, oracle), 1e-6) << trial;
  }
}

TEST(CentralDir, SimplexAndNonNegativeAlignment) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + trial % 3;
    Vecs g(k, std::vector<double>(8));
    for (auto& v : g) {
      for (auto& x : v) x = uniform(rng, -1, 1) * (1 + trial % 4);
    }
    CentralDirState state;
    const auto r = central_dir_weights(g, {}, state);
    double s = 0;
    for (double w : r.weights) {
      EXPECT_GE(w, 0.0);
      s += w;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    if (r.degenerate) continue;
    for (const auto& v : g) EXPECT_GE(dotp(r.combined, v) / std::sqrt(dotp(v, v)), -1e-9) << trial;
  }
}

TEST(CentralDir, CombinedRescaledToMeanNorm) {
  CentralDirState state;
  const Vecs g{{3, 0}, {0, 1}};
  const auto r = central_dir_weights(g, {}, state);
  EXPECT_NEAR(std::sqrt(dotp(r.combined, r.combined)), 2.0, 1e-12);
}

TEST(CentralDir, TensionRaisesGrowingTask) {
  CentralDirConfig cfg;
  cfg.alpha = 0.3;
  CentralDirState state;
  const Vecs steady{{1, 0, 0}, {0, 1, 0}};
  for (int i = 0; i < 10; ++i) central_dir_weights(steady, cfg, state);
  const Vecs grown{{3, 0, 0}, {0, 1, 0}};
  const auto r = central_dir_weights(grown, cfg, state);
  EXPECT_NEAR(r.tension[0], 3.0, 1e-12);
  EXPECT_NEAR(r.tension[1], 1.0, 1e-12);
  EXPECT_GT(r.weights[0], r.min_norm_weights[0]);
  // 0.5 (1 + 0.3 * 2) vs 0.5, renormalized.
  EXPECT_NEAR(r.weights[0], 1.6 / 2.6, 1e-12);
}

TEST(CentralDir, WindowBoundsHistory) {
  CentralDirConfig cfg;
  cfg.window = 3;
  CentralDirState state;
  for (int i = 1; i <= 5; ++i) central_dir_weights(Vecs{{double(i), 0}, {0, 1}}, cfg, state);
  ASSERT_EQ(state.history[0].size(), 3u);
  EXPECT_EQ(state.history[0].front(), 3.0);
}

TEST(CentralDir, ZeroGradientExcluded) {
  CentralDirState state;
  const auto r = central_dir_weights(Vecs{{0, 0}, {0, 2}}, {}, state);
  EXPECT_EQ(r.excluded, 1u);
  EXPECT_EQ(r.weights[0], 0.0);
  EXPECT_EQ(r.weights[1], 1.0);
}

TEST(CentralDir, OpposingGradientsDegenerate) {
  CentralDirState state;
  const auto r = central_dir_weights(Vecs{{1, 0}, {-1, 0}}, {}, state);
  EXPECT_TRUE(r.degenerate);
  EXPECT_DOUBLE_EQ(r.weights[0], 0.5);
  EXPECT_DOUBLE_EQ(r.weights[1], 0.5);
}

TEST(CentralDir, RejectsNonFinite) {
  CentralDirState state;
  EXPECT_THROW(central_dir_weights(Vecs{{NAN, 0}, {0, 1}}, {}, state), NumericError);
}

}  // namespace
}  // namespace ssp::loss
