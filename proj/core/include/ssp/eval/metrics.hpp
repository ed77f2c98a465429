#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "ssp/geometry/estimate.hpp"
#include "ssp/geometry/keypoints.hpp"
#include "ssp/model/postprocess.hpp"

namespace ssp::eval {

// Size of both views (pairs share one shape).
struct ViewShape {
  int height = 0;
  int width = 0;
};

// Points of A whose warp lands inside B, and points of B whose inverse warp
// lands inside A. Indices refer to the input sets.
struct SharedRegion {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
};

SharedRegion shared_region(const geom::KeypointSet& a, const geom::KeypointSet& b, const geom::Homography& h,
                           ViewShape shape);

struct RepeatabilityResult {
  double repeatability = 0;
  std::optional<double> mle;  // absent when nothing repeated
  std::size_t counted = 0;    // shared-region points over both views
  std::size_t repeated = 0;
};

// A point is repeated when a counterpart lies within epsilon of its warp;
// counted symmetrically over both views. nullopt when no point is counted.
std::optional<RepeatabilityResult> repeatability(const geom::KeypointSet& a, const geom::KeypointSet& b,
                                                 const geom::Homography& h, ViewShape shape, double epsilon);

struct Match {
  std::size_t a = 0;
  std::size_t b = 0;
  double similarity = 0;
};

// Optional secondary key for exactly tied similarities (lower wins).
using TieBreak = std::function<double(std::size_t a, std::size_t b)>;

// Mutual nearest neighbours. Similarity is 1 - |a - b|^2 / 2 in double,
// which equals the dot product for unit vectors and is exactly 1 only for
// identical vectors. Ties go to the tie-break key, then the lower index.
// Sorted by descending similarity (then a index).
std::vector<Match> nn_matches(const model::DescriptorSet& a, const model::DescriptorSet& b,
                              const TieBreak& tie_break = {});

// Mean of precision@k over the positions of correct matches in a ranking.
double average_precision(const std::vector<bool>& ranked_correct);

struct MatchingResult {
  std::optional<double> nn_map;          // absent when there are no matches
  std::optional<double> matching_score;  // absent when a shared region is empty
  std::size_t matches = 0;
  std::size_t correct = 0;
};

// Both metrics on keypoints restricted to the shared region. A match is
// correct when its transfer error is within epsilon in both views (A warped
// into B, and B warped back into A).
MatchingResult matching_metrics(const geom::KeypointSet& kps_a, const model::DescriptorSet& desc_a,
                                const geom::KeypointSet& kps_b, const model::DescriptorSet& desc_b,
                                const geom::Homography& h, ViewShape shape, double epsilon);

struct HomographyResult {
  std::array<bool, 3> correct{};
  std::optional<double> corner_error;
  bool estimation_failed = false;
};

// Mean distance between the four image corners mapped by h_true and h_est.
double mean_corner_error(const geom::Homography& h_true, const geom::Homography& h_est, ViewShape shape);

// Estimates H from mutual-NN matches over all keypoints and compares the
// corners; fewer than 4 matches or a failed estimate is incorrect everywhere.
HomographyResult homography_estimation(const geom::KeypointSet& kps_a, const model::DescriptorSet& desc_a,
                                       const geom::KeypointSet& kps_b, const model::DescriptorSet& desc_b,
                                       const geom::Homography& h_true, ViewShape shape,
                                       const std::array<double, 3>& thresholds, const geom::RansacConfig& ransac);

}  // namespace ssp::eval
