#pragma once

#include <cstddef>
#include <vector>

#include "ssp/geometry/homography.hpp"

namespace ssp::geom {

// Subpixel location. Stored in double so projective round trips stay exact
// to ~1e-12; the dataset file keeps f32, so producers emit f32-representable
// coordinates.
struct Keypoint {
  double row = 0;
  double col = 0;
  double score = 0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// Producers (NMS, the renderer) emit points inside the image, sorted by
// descending score.
using KeypointSet = std::vector<Keypoint>;

struct WarpedKeypoints {
  KeypointSet points;
  std::size_t dropped = 0;  // mapped to the plane at infinity
};

// Homogeneous transform + dehomogenization; scores and order preserved.
WarpedKeypoints warp_points(const KeypointSet& points, const Homography& h);

// Keeps points with 0 <= row <= height-1 and 0 <= col <= width-1.
KeypointSet filter_inside(const KeypointSet& points, int height, int width);

}  // namespace ssp::geom
