#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ssp/autodiff/tensor.hpp"
#include "ssp/common/rng.hpp"
#include "ssp/geometry/homography.hpp"

namespace ssp::loss {

struct CorrespondenceConfig {
  double positive_radius = 8.0;  // pixels, full-image coordinates
  std::size_t negative_count = 2000;
  // With positives present, at most this many negatives per positive.
  std::size_t negative_ratio = 10;

  void validate() const;
};

// Cell index pairs (a in view 1, b in view 2), row-major cell indices.
struct CorrespondenceSet {
  int grid_height = 0;
  int grid_width = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> positives;
  std::vector<std::pair<std::int32_t, std::int32_t>> negatives;

  std::size_t n_p() const { return positives.size(); }
  std::size_t n_n() const { return negatives.size(); }
  // Same labeling seen from view 2.
  CorrespondenceSet transposed() const;
};

// View-1 cell centers (8 c + 3.5, 8 r + 3.5) are warped by h. The nearest
// view-2 cell (by rounding, no clamping) is the positive when the warped
// point lies within positive_radius of its center. Negatives are drawn
// uniformly, with replacement, from pairs whose warped distance exceeds the
// radius (view-1 cells mapping to infinity pair negatively with every cell).
CorrespondenceSet build_correspondences(const geom::Homography& h, int grid_height, int grid_width,
                                        const CorrespondenceConfig& config, Rng& rng);

struct HingeConfig {
  double m_p = 1.0;
  double m_n = 0.2;

  void validate() const;  // requires m_p > m_n
};

template <class T>
struct DescriptorLoss {
  ad::Tensor<T> total;
  ad::Tensor<T> positive;  // undefined when no positives
  ad::Tensor<T> negative;  // undefined when no negatives
};

// coarse1/coarse2 [N, D, Hc, Wc], raw; each cell vector is L2-normalized
// before the dot product. Sums run over the whole batch:
//   L_p = sum over positives of max(0, m_p - d.d') / n_p
//   L_n = sum over negatives of max(0, d.d' - m_n) / n_n
// Throws ssp::Error when the batch has neither.
template <class T>
DescriptorLoss<T> descriptor_loss(const ad::Tensor<T>& coarse1, const ad::Tensor<T>& coarse2,
                                  std::span<const CorrespondenceSet> correspondences, const HingeConfig& config);

}  // namespace ssp::loss
