#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssp/autodiff/tensor.hpp"
#include "ssp/common/grid.hpp"
#include "ssp/geometry/keypoints.hpp"

namespace ssp::loss {

enum class DetectorLossKind {
  // Softmax over the 65 cell channels, then per-channel binary cross-entropy
  // against the one-hot target, averaged over channels, cells and batch.
  LiteralBce,
  // Standard 65-way cross-entropy averaged over cells and batch.
  Categorical,
};

// Per-cell target channel (0..63 for the in-cell pixel, 64 for the
// dustbin), row-major over the Hc x Wc grid. At most one keypoint per cell:
// the higher score wins, then the earlier (row, col).
std::vector<std::int32_t> detector_targets(const geom::KeypointSet& keypoints, int height, int width);

// logits [N, 65, Hc, Wc]; targets holds N * Hc * Wc entries, item-major.
template <class T>
ad::Tensor<T> detector_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> targets,
                            DetectorLossKind kind = DetectorLossKind::LiteralBce);

// Weighted cross-entropy over C classes, averaged over cells and batch.
// labels holds N * Hc * Wc class indices; empty class_weights means all 1.
template <class T>
ad::Tensor<T> semantic_loss(const ad::Tensor<T>& logits, std::span<const std::uint8_t> labels,
                            std::span<const double> class_weights = {});

// Floor applied inside the logarithms so saturated float softmax outputs
// produce a finite loss.
inline constexpr double kLogFloor = 1e-12;

}  // namespace ssp::loss
