#include "ssp/losses/task_losses.hpp"

#include <cmath>
#include <string>

#include "ssp/autodiff/ops.hpp"

namespace ssp::loss {
namespace {

constexpr int kCell = 8;
constexpr int kChannels = 65;

// Dense [N, K, Hc, Wc] tensor with value[n, labels[n, cell], cell] = weight.
template <class T, class Label, class WeightFn>
ad::Tensor<T> one_hot(const ad::Shape& shape, std::span<const Label> labels, WeightFn weight) {
  const std::int64_t n = shape[0], k = shape[1], cells = shape[2] * shape[3];
  auto y = ad::Tensor<T>::zeros(shape);
  auto& v = y.values();
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t c = 0; c < cells; ++c) {
      const auto label = static_cast<std::int64_t>(labels[b * cells + c]);
      v[(b * k + label) * cells + c] = static_cast<T>(weight(label));
    }
  }
  return y;
}

template <class T, class Label>
void check_labels(const ad::Tensor<T>& logits, std::span<const Label> labels, std::int64_t classes, const char* what) {
  if (logits.rank() != 4 || logits.dim(1) != classes) {
    throw ShapeError(std::string(what) + ": logits must be [N, " + std::to_string(classes) + ", Hc, Wc], got " +
                     ad::to_string(logits.shape()));
  }
  const std::int64_t expect = logits.dim(0) * logits.dim(2) * logits.dim(3);
  if (static_cast<std::int64_t>(labels.size()) != expect) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expect) + " labels, got " +
                     std::to_string(labels.size()));
  }
  for (auto l : labels) {
    if (static_cast<std::int64_t>(l) < 0 || static_cast<std::int64_t>(l) >= classes) {
      throw Error(std::string(what) + ": label " + std::to_string(static_cast<long long>(l)) + " out of range");
    }
  }
}

}  // namespace

std::vector<std::int32_t> detector_targets(const geom::KeypointSet& keypoints, int height, int width) {
  if (height % kCell != 0 || width % kCell != 0) {
    throw ShapeError("label image " + std::to_string(height) + "x" + std::to_string(width) + " is not divisible by 8");
  }
  const int hc = height / kCell, wc = width / kCell;
  std::vector<std::int32_t> target(static_cast<std::size_t>(hc) * wc, kChannels - 1);
  std::vector<const geom::Keypoint*> owner(target.size(), nullptr);
  std::vector<std::pair<int, int>> owner_px(target.size());
  for (const auto& kp : keypoints) {
    const int r = std::clamp(static_cast<int>(std::lround(kp.row)), 0, height - 1);
    const int c = std::clamp(static_cast<int>(std::lround(kp.col)), 0, width - 1);
    const std::size_t cell = static_cast<std::size_t>(r / kCell) * wc + c / kCell;
    const auto* prev = owner[cell];
    const bool wins = !prev || kp.score > prev->score ||
                      (kp.score == prev->score && std::pair(r, c) < owner_px[cell]);
    if (!wins) continue;
    owner[cell] = &kp;
    owner_px[cell] = {r, c};
    target[cell] = (r % kCell) * kCell + c % kCell;
  }
  return target;
}

template <class T>
ad::Tensor<T> detector_loss(const ad::Tensor<T>& logits, std::span<const std::int32_t> targets, DetectorLossKind kind) {
  check_labels(logits, targets, kChannels, "detector_loss");
  const auto p = ad::softmax(logits, 1);
  const auto y = one_hot<T>(logits.shape(), targets, [](std::int64_t) { return 1.0; });
  const auto log_p = ad::log(p, kLogFloor);
  if (kind == DetectorLossKind::Categorical) {
    const double cells = static_cast<double>(logits.dim(0) * logits.dim(2) * logits.dim(3));
    return ad::scale(ad::sum(ad::mul(y, log_p)), -1.0 / cells);
  }
  auto not_y = ad::Tensor<T>::full(logits.shape(), T(1));
  for (std::size_t i = 0; i < not_y.values().size(); ++i) not_y.values()[i] -= y.values()[i];
  const auto log_q = ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0), kLogFloor);
  return ad::scale(ad::mean(ad::add(ad::mul(y, log_p), ad::mul(not_y, log_q))), -1.0);
}

template <class T>
ad::Tensor<T> semantic_loss(const ad::Tensor<T>& logits, std::span<const std::uint8_t> labels,
                            std::span<const double> class_weights) {
  if (logits.rank() != 4) throw ShapeError("semantic_loss: logits must be [N, C, Hc, Wc]");
  const std::int64_t classes = logits.dim(1);
  check_labels(logits, labels, classes, "semantic_loss");
  if (!class_weights.empty() && static_cast<std::int64_t>(class_weights.size()) != classes) {
    throw ShapeError("semantic_loss: expected " + std::to_string(classes) + " class weights");
  }
  const auto wy = one_hot<T>(logits.shape(), labels, [&](std::int64_t c) {
    return class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(c)];
  });
  const double cells = static_cast<double>(logits.dim(0) * logits.dim(2) * logits.dim(3));
  const auto log_p = ad::log(ad::softmax(logits, 1), kLogFloor);
  return ad::scale(ad::sum(ad::mul(wy, log_p)), -1.0 / cells);
}

template ad::Tensor<float> detector_loss<float>(const ad::Tensor<float>&, std::span<const std::int32_t>, DetectorLossKind);
template ad::Tensor<double> detector_loss<double>(const ad::Tensor<double>&, std::span<const std::int32_t>,
                                                  DetectorLossKind);
template ad::Tensor<float> semantic_loss<float>(const ad::Tensor<float>&, std::span<const std::uint8_t>,
                                                std::span<const double>);
template ad::Tensor<double> semantic_loss<double>(const ad::Tensor<double>&, std::span<const std::uint8_t>,
                                                  std::span<const double>);

}  // namespace ssp::loss
