#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ssp/geometry/homography.hpp"

namespace ssp::geom {

struct PointPair {
  Point src;
  Point dst;
};

struct RansacConfig {
  int max_iterations = 1000;
  double inlier_threshold = 3.0;  // pixels, one-sided reprojection error
  double confidence = 0.999;      // adaptive early stop
  std::uint64_t seed = 0;
};

struct HomographyFit {
  Homography h;
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
};

// Normalized DLT on all pairs (least squares for n > 4). nullopt if fewer
// than 4 pairs or the configuration is degenerate.
std::optional<Homography> fit_homography_dlt(std::span<const PointPair> pairs);

// Minimal 4-point hypotheses inside RANSAC, refit on the final inlier set.
// nullopt signals estimation failure.
std::optional<HomographyFit> estimate_homography(std::span<const PointPair> pairs, const RansacConfig& config = {});

}  // namespace ssp::geom
