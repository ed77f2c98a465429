#pragma once

#include "ssp/common/grid.hpp"
#include "ssp/geometry/homography.hpp"

namespace ssp::geom {

// Inverse mapping: each output pixel samples the source at H^-1 (x, y) with
// bilinear interpolation. Sources outside [0, W-1] x [0, H-1] give 0.
Image warp_image(const Image& image, const Homography& h, int out_height, int out_width);

// Nearest-neighbour variant for label maps; outside samples give `fill`.
ClassMask warp_mask(const ClassMask& mask, const Homography& h, int out_height, int out_width,
                    std::uint8_t fill = 0);

// 1 where H^-1 of the output pixel lies inside a src_height x src_width
// image, else 0.
Grid<std::uint8_t> warp_valid_mask(const Homography& h, int src_height, int src_width, int out_height,
                                   int out_width);

}  // namespace ssp::geom
