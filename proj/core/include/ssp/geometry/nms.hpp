#pragma once

#include <cstddef>
#include <limits>

#include "ssp/common/grid.hpp"
#include "ssp/geometry/keypoints.hpp"

namespace ssp::geom {

inline constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

// Greedy suppression: candidates >= threshold are visited by descending
// score (ties: lower row, then lower column) and accepted unless an accepted
// point lies within Chebyshev distance <= radius. Stops after top_k.
KeypointSet nms(const Image& heatmap, int radius, float threshold, std::size_t top_k = kNoLimit);

}  // namespace ssp::geom
