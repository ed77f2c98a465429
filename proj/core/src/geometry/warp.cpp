#include "ssp/geometry/warp.hpp"

#include <cmath>

#include "ssp/geometry/keypoints.hpp"

namespace ssp::geom {
namespace {

// Tolerance for sources that land a rounding error outside the border.
constexpr double kEdge = 1e-9;

template <class F>
void for_each_source(const Homography& h, int out_height, int out_width, F&& visit) {
  const Eigen::Matrix3d inv = h.inverse().matrix();
  for (int r = 0; r < out_height; ++r) {
    for (int c = 0; c < out_width; ++c) {
      const double w = inv(2, 0) * c + inv(2, 1) * r + inv(2, 2);
      if (std::abs(w) < 1e-12) {
        visit(r, c, std::nullopt);
        continue;
      }
      const double sx = (inv(0, 0) * c + inv(0, 1) * r + inv(0, 2)) / w;
      const double sy = (inv(1, 0) * c + inv(1, 1) * r + inv(1, 2)) / w;
      visit(r, c, std::optional<Point>(Point{sx, sy}));
    }
  }
}

bool inside(const Point& p, int height, int width) {
  return p.x >= -kEdge && p.y >= -kEdge && p.x <= width - 1 + kEdge && p.y <= height - 1 + kEdge;
}

}  // namespace

Image warp_image(const Image& image, const Homography& h, int out_height, int out_width) {
  Image out(out_height, out_width, 0.0f);
  const int hh = image.height, ww = image.width;
  if (hh == 0 || ww == 0) return out;
  for_each_source(h, out_height, out_width, [&](int r, int c, std::optional<Point> src) {
    if (!src || !inside(*src, hh, ww)) return;
    const double sx = std::clamp(src->x, 0.0, ww - 1.0);
    const double sy = std::clamp(src->y, 0.0, hh - 1.0);
    const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0, fy = sy - y0;
    const int x1 = std::min(x0 + 1, ww - 1), y1 = std::min(y0 + 1, hh - 1);
    if (fx == 0.0 && fy == 0.0) {
      out.at(r, c) = image.at(y0, x0);
      return;
    }
    const double v = (1 - fy) * ((1 - fx) * image.at(y0, x0) + fx * image.at(y0, x1)) +
                     fy * ((1 - fx) * image.at(y1, x0) + fx * image.at(y1, x1));
    out.at(r, c) = static_cast<float>(v);
  });
  return out;
}

ClassMask warp_mask(const ClassMask& mask, const Homography& h, int out_height, int out_width, std::uint8_t fill) {
  ClassMask out(out_height, out_width, fill);
  for_each_source(h, out_height, out_width, [&](int r, int c, std::optional<Point> src) {
    if (!src || !inside(*src, mask.height, mask.width)) return;
    const int x = std::clamp(static_cast<int>(std::lround(src->x)), 0, mask.width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(src->y)), 0, mask.height - 1);
    out.at(r, c) = mask.at(y, x);
  });
  return out;
}

Grid<std::uint8_t> warp_valid_mask(const Homography& h, int src_height, int src_width, int out_height,
                                   int out_width) {
  Grid<std::uint8_t> out(out_height, out_width, 0);
  for_each_source(h, out_height, out_width, [&](int r, int c, std::optional<Point> src) {
    if (src && inside(*src, src_height, src_width)) out.at(r, c) = 1;
  });
  return out;
}

WarpedKeypoints warp_points(const KeypointSet& points, const Homography& h) {
  WarpedKeypoints out;
  out.points.reserve(points.size());
  for (const auto& kp : points) {
    auto p = h.apply({kp.col, kp.row});
    if (!p) {
      ++out.dropped;
      continue;
    }
    out.points.push_back({p->y, p->x, kp.score});
  }
  return out;
}

KeypointSet filter_inside(const KeypointSet& points, int height, int width) {
  KeypointSet out;
  for (const auto& kp : points) {
    if (kp.row >= 0 && kp.col >= 0 && kp.row <= height - 1 && kp.col <= width - 1) out.push_back(kp);
  }
  return out;
}

}  // namespace ssp::geom
