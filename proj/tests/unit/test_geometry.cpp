#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ssp/geometry/estimate.hpp"
#include "ssp/geometry/homography.hpp"
#include "ssp/geometry/keypoints.hpp"
#include "ssp/geometry/nms.hpp"
#include "ssp/geometry/warp.hpp"

namespace ssp::geom {
namespace {

double max_rel_diff(const Homography& a, const Homography& b) {
  const double scale = b.matrix().cwiseAbs().maxCoeff();
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff() / scale;
}

Homography random_h(std::uint64_t seed, int h = 120, int w = 160) {
  Rng rng(seed);
  return sample_homography({}, h, w, rng);
}

TEST(Homography, CollapsedRangesGiveIdentity) {
  Rng rng(1);
  const auto h = sample_homography(HomographySampleConfig::identity_only(), 120, 160, rng);
  EXPECT_LT((h.matrix() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Homography, RightAngleRotationAboutCenter) {
  auto cfg = HomographySampleConfig::identity_only();
  cfg.rotation_min = cfg.rotation_max = std::numbers::pi / 2;
  Rng rng(2);
  const auto h = sample_homography(cfg, 120, 160, rng);
  const Point c{79.5, 59.5};
  const auto mc = h.apply(c);
  ASSERT_TRUE(mc);
  EXPECT_NEAR(mc->x, c.x, 1e-9);
  EXPECT_NEAR(mc->y, c.y, 1e-9);
  // A point 10 px right of center lands 10 px along the perpendicular.
  const auto mp = h.apply({c.x + 10, c.y});
  ASSERT_TRUE(mp);
  EXPECT_NEAR(std::hypot(mp->x - c.x, mp->y - c.y), 10.0, 1e-9);
  EXPECT_NEAR(mp->x - c.x, 0.0, 1e-9);
  EXPECT_NEAR(h(2, 0), 0.0, 1e-15);
  EXPECT_NEAR(h(2, 1), 0.0, 1e-15);
}

TEST(Homography, SamplingIsAPureFunctionOfTheSeed) {
  EXPECT_EQ(random_h(42).matrix(), random_h(42).matrix());
  EXPECT_NE(random_h(42).matrix(), random_h(43).matrix());
}

TEST(Homography, RejectsSingularMatrix) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(2, 2) = 1;
  EXPECT_THROW(Homography::from_matrix(m), Error);
}

TEST(Homography, InvalidRangeRejected) {
  HomographySampleConfig cfg;
  cfg.scale_min = 2.0;
  cfg.scale_max = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Warp, IdentityIsBitExact) {
  Rng rng(3);
  Image img(24, 32);
  for (auto& v : img.values) v = static_cast<float>(uniform(rng, 0, 1));
  EXPECT_EQ(warp_image(img, Homography::identity(), 24, 32), img);
}

TEST(Warp, TranslationRoundTripOnInterior) {
  Rng rng(4);
  Image img(40, 48);
  for (auto& v : img.values) v = static_cast<float>(uniform(rng, 0, 1));
  const auto there = warp_image(img, Homography::translation(8, 0), 40, 48);
  const auto back = warp_image(there, Homography::translation(-8, 0), 40, 48);
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) EXPECT_NEAR(back.at(r, c), img.at(r, c), 1e-6);
  }
}

TEST(Warp, ConstantImageStaysConstantInBounds) {
  Image img(60, 80, 0.37f);
  const auto h = random_h(5, 60, 80);
  const auto out = warp_image(img, h, 60, 80);
  const auto valid = warp_valid_mask(h, 60, 80, 60, 80);
  int inside = 0;
  for (int r = 0; r < 60; ++r) {
    for (int c = 0; c < 80; ++c) {
      if (!valid.at(r, c)) continue;
      ++inside;
      EXPECT_NEAR(out.at(r, c), 0.37f, 1e-6);
    }
  }
  EXPECT_GT(inside, 1000);
}

TEST(Warp, MaskUsesNearestNeighbour) {
  ClassMask m(16, 16, 0);
  m.at(4, 4) = 3;
  const auto out = warp_mask(m, Homography::translation(2, 1), 16, 16);
  EXPECT_EQ(out.at(5, 6), 3);
  EXPECT_EQ(out.at(4, 4), 0);
}

TEST(WarpPoints, IdentityAndTranslation) {
  KeypointSet pts{{20, 10, 1.0}, {3.5, 7.25, 0.5}};
  EXPECT_EQ(warp_points(pts, Homography::identity()).points, pts);
  // (x, y) = (10, 20) under (+5, +3) -> (15, 23).
  const auto moved = warp_points({{20, 10, 1.0}}, Homography::translation(5, 3));
  ASSERT_EQ(moved.points.size(), 1u);
  EXPECT_DOUBLE_EQ(moved.points[0].col, 15.0);
  EXPECT_DOUBLE_EQ(moved.points[0].row, 23.0);
}

TEST(WarpPoints, RoundTripWithin1e9) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = random_h(100 + trial);
    KeypointSet pts;
    for (int i = 0; i < 30; ++i) pts.push_back({uniform(rng, 0, 119), uniform(rng, 0, 159), 1.0});
    const auto back = warp_points(warp_points(pts, h).points, h.inverse()).points;
    ASSERT_EQ(back.size(), pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_NEAR(back[i].row, pts[i].row, 1e-9);
      EXPECT_NEAR(back[i].col, pts[i].col, 1e-9);
    }
  }
}

TEST(WarpPoints, PointAtInfinityDropped) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 0) = 1.0;  // w = x + 1; zero at x = -1
  m(2, 2) = 1.0;
  const auto h = Homography::from_matrix(m);
  const auto out = warp_points({{0, -1, 1}, {5, 5, 1}}, h);
  EXPECT_EQ(out.dropped, 1u);
  EXPECT_EQ(out.points.size(), 1u);
}

std::vector<PointPair> exact_pairs(const Homography& h, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PointPair> pairs;
  while (static_cast<int>(pairs.size()) < n) {
    const Point p{uniform(rng, 0, 159), uniform(rng, 0, 119)};
    if (auto q = h.apply(p)) pairs.push_back({p, *q});
  }
  return pairs;
}

TEST(Estimate, FourIdentityCorrespondences) {
  const std::vector<PointPair> pairs{{{0, 0}, {0, 0}}, {{100, 0}, {100, 0}}, {{0, 80}, {0, 80}}, {{100, 80}, {100, 80}}};
  const auto fit = estimate_homography(pairs);
  ASSERT_TRUE(fit);
  EXPECT_LT((fit->h.matrix() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Estimate, RecoversRandomHomographyFromExactMatches) {
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = random_h(200 + trial);
    const auto fit = estimate_homography(exact_pairs(h, 20, trial));
    ASSERT_TRUE(fit);
    EXPECT_LT(max_rel_diff(fit->h, h), 1e-6);
    EXPECT_EQ(fit->inlier_count, 20u);
  }
}

TEST(Estimate, PlantedOutliersExcluded) {
  const auto h = random_h(300);
  auto pairs = exact_pairs(h, 20, 7);
  for (int i = 0; i < 8; ++i) pairs[i].dst = {pairs[i].dst.x + 40 + 3 * i, pairs[i].dst.y - 35};
  RansacConfig cfg;
  cfg.seed = 9;
  const auto fit = estimate_homography(pairs, cfg);
  ASSERT_TRUE(fit);
  EXPECT_LT(max_rel_diff(fit->h, h), 1e-6);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(fit->inliers[i], i >= 8) << i;
}

TEST(Estimate, TooFewMatchesFails) {
  const auto pairs = exact_pairs(Homography::identity(), 3, 1);
  EXPECT_FALSE(estimate_homography(pairs));
  EXPECT_FALSE(fit_homography_dlt(pairs));
}

TEST(Nms, SinglePeak) {
  Image heat(20, 20, 0.f);
  heat.at(7, 11) = 0.9f;
  const auto pts = nms(heat, 4, 0.015f);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].row, 7);
  EXPECT_EQ(pts[0].col, 11);
}

TEST(Nms, GreedySuppression) {
  Image heat(20, 20, 0.f);
  heat.at(5, 5) = 0.9f;
  heat.at(5, 7) = 0.8f;
  const auto pts = nms(heat, 4, 0.015f);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].col, 5);
}

TEST(Nms, EmptyHeatmap) { EXPECT_TRUE(nms(Image(16, 16, 0.f), 4, 0.015f).empty()); }

TEST(Nms, TieBreakLowerRowThenColumn) {
  Image heat(20, 20, 0.f);
  heat.at(6, 9) = 0.5f;
  heat.at(6, 7) = 0.5f;
  heat.at(8, 2) = 0.5f;
  const auto pts = nms(heat, 2, 0.1f);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].row, 6);
  EXPECT_EQ(pts[0].col, 7);
  EXPECT_EQ(pts[1].row, 8);
}

TEST(Nms, SpacingOrderAndTopK) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    Image heat(60, 80);
    for (auto& v : heat.values) v = static_cast<float>(uniform(rng, 0, 1));
    const std::size_t top_k = 40;
    const auto pts = nms(heat, 4, 0.1f, top_k);
    EXPECT_LE(pts.size(), top_k);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) {
        EXPECT_GE(pts[i - 1].score, pts[i].score);
      }
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double d = std::max(std::abs(pts[i].row - pts[j].row), std::abs(pts[i].col - pts[j].col));
        EXPECT_GT(d, 4.0);
      }
    }
  }
}

}  // namespace
}  // namespace ssp::geom
