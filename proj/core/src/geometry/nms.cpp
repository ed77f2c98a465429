#include "ssp/geometry/nms.hpp"

#include <algorithm>
#include <numeric>

namespace ssp::geom {

KeypointSet nms(const Image& heatmap, int radius, float threshold, std::size_t top_k) {
  if (radius < 0) throw Error("nms: radius must be non-negative");
  struct Candidate {
    float score;
    int row, col;
  };
  std::vector<Candidate> candidates;
  for (int r = 0; r < heatmap.height; ++r) {
    for (int c = 0; c < heatmap.width; ++c) {
      const float s = heatmap.at(r, c);
      if (s >= threshold) candidates.push_back({s, r, c});
    }
  }
  // Row-major collection order already encodes the (row, col) tie-break.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  // A pixel is blocked once it falls in the (2r+1)^2 box of an accepted point,
  // which is exactly Chebyshev distance <= radius.
  Grid<std::uint8_t> blocked(heatmap.height, heatmap.width, 0);
  KeypointSet out;
  for (const auto& cand : candidates) {
    if (out.size() >= top_k) break;
    if (blocked.at(cand.row, cand.col)) continue;
    out.push_back({static_cast<double>(cand.row), static_cast<double>(cand.col), static_cast<double>(cand.score)});
    const int r0 = std::max(0, cand.row - radius), r1 = std::min(heatmap.height - 1, cand.row + radius);
    const int c0 = std::max(0, cand.col - radius), c1 = std::min(heatmap.width - 1, cand.col + radius);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) blocked.at(r, c) = 1;
    }
  }
  return out;
}

}  // namespace ssp::geom
