#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ssp/autodiff/tensor.hpp"
#include "ssp/common/grid.hpp"
#include "ssp/geometry/keypoints.hpp"

namespace ssp::model {

// Cell logits [N, 65, Hc, Wc] of batch item n -> [8 Hc, 8 Wc] score map.
// Channel k of cell (i, j) lands on pixel (8 i + k / 8, 8 j + k % 8); the
// dustbin channel is dropped after the softmax.
template <class T>
Image extract_heatmap(const ad::Tensor<T>& logits, std::int64_t n = 0);

// Row-major [count, dim] block of unit vectors.
struct DescriptorSet {
  int dim = 0;
  std::vector<float> values;
  std::size_t degenerate = 0;  // replaced by the first basis vector

  std::size_t size() const { return dim ? values.size() / dim : 0; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, static_cast<std::size_t>(dim)}; }
};

// Keys bicubic kernel, a = -0.5.
double keys_cubic(double t);

// Bicubic interpolation of coarse [N, D, Hc, Wc] item n at each keypoint.
// The coarse grid node (i, j) sits at the pixel-space cell center
// (8 i + 3.5, 8 j + 3.5); indices past the border are clamped.
template <class T>
DescriptorSet sample_descriptors(const ad::Tensor<T>& coarse, const geom::KeypointSet& keypoints, std::int64_t n = 0);

}  // namespace ssp::model
