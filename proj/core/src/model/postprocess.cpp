#include "ssp/model/postprocess.hpp"

#include <algorithm>
#include <cmath>

#include "ssp/model/network.hpp"

namespace ssp::model {

template <class T>
Image extract_heatmap(const ad::Tensor<T>& logits, std::int64_t n) {
  if (logits.rank() != 4 || logits.dim(1) != kDetectorChannels) {
    throw ShapeError("detector logits must be [N, 65, Hc, Wc], got " + ad::to_string(logits.shape()));
  }
  if (n < 0 || n >= logits.dim(0)) throw ShapeError("batch index " + std::to_string(n) + " out of range");
  const int hc = static_cast<int>(logits.dim(2));
  const int wc = static_cast<int>(logits.dim(3));
  const std::size_t plane = static_cast<std::size_t>(hc) * wc;
  const T* base = logits.data().data() + static_cast<std::size_t>(n) * kDetectorChannels * plane;

  Image heat(hc * kCell, wc * kCell);
  double e[kDetectorChannels];
  for (int i = 0; i < hc; ++i) {
    for (int j = 0; j < wc; ++j) {
      const std::size_t off = static_cast<std::size_t>(i) * wc + j;
      double mx = -INFINITY;
      for (int k = 0; k < kDetectorChannels; ++k) mx = std::max(mx, static_cast<double>(base[k * plane + off]));
      double total = 0;
      for (int k = 0; k < kDetectorChannels; ++k) total += e[k] = std::exp(base[k * plane + off] - mx);
      for (int k = 0; k < kDustbin; ++k) {
        heat.at(i * kCell + k / kCell, j * kCell + k % kCell) = static_cast<float>(e[k] / total);
      }
    }
  }
  return heat;
}

double keys_cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1) return ((a + 2) * t - (a + 3)) * t * t + 1;
  if (t < 2) return ((a * t - 5 * a) * t + 8 * a) * t - 4 * a;
  return 0;
}

template <class T>
DescriptorSet sample_descriptors(const ad::Tensor<T>& coarse, const geom::KeypointSet& keypoints, std::int64_t n) {
  if (coarse.rank() != 4) throw ShapeError("coarse descriptors must be [N, D, Hc, Wc], got " + ad::to_string(coarse.shape()));
  if (n < 0 || n >= coarse.dim(0)) throw ShapeError("batch index " + std::to_string(n) + " out of range");
  const int d = static_cast<int>(coarse.dim(1));
  const int hc = static_cast<int>(coarse.dim(2));
  const int wc = static_cast<int>(coarse.dim(3));
  const std::size_t plane = static_cast<std::size_t>(hc) * wc;
  const T* base = coarse.data().data() + static_cast<std::size_t>(n) * d * plane;

  DescriptorSet out;
  out.dim = d;
  out.values.resize(keypoints.size() * d);
  std::vector<double> acc(d);
  for (std::size_t p = 0; p < keypoints.size(); ++p) {
    const double gy = (keypoints[p].row - (kCell - 1) / 2.0) / kCell;
    const double gx = (keypoints[p].col - (kCell - 1) / 2.0) / kCell;
    const int iy = static_cast<int>(std::floor(gy));
    const int ix = static_cast<int>(std::floor(gx));
    double wy[4], wx[4];
    int ry[4], rx[4];
    for (int k = 0; k < 4; ++k) {
      wy[k] = keys_cubic(gy - (iy - 1 + k));
      wx[k] = keys_cubic(gx - (ix - 1 + k));
      ry[k] = std::clamp(iy - 1 + k, 0, hc - 1);
      rx[k] = std::clamp(ix - 1 + k, 0, wc - 1);
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const double w = wy[a] * wx[b];
        if (w == 0) continue;
        const std::size_t off = static_cast<std::size_t>(ry[a]) * wc + rx[b];
        for (int c = 0; c < d; ++c) acc[c] += w * base[c * plane + off];
      }
    }
    double norm = 0;
    for (double v : acc) norm += v * v;
    norm = std::sqrt(norm);
    float* dst = out.values.data() + p * d;
    if (norm < 1e-12) {
      ++out.degenerate;
      std::fill(dst, dst + d, 0.0f);
      dst[0] = 1.0f;
      continue;
    }
    for (int c = 0; c < d; ++c) dst[c] = static_cast<float>(acc[c] / norm);
  }
  return out;
}

template Image extract_heatmap<float>(const ad::Tensor<float>&, std::int64_t);
template Image extract_heatmap<double>(const ad::Tensor<double>&, std::int64_t);
template DescriptorSet sample_descriptors<float>(const ad::Tensor<float>&, const geom::KeypointSet&, std::int64_t);
template DescriptorSet sample_descriptors<double>(const ad::Tensor<double>&, const geom::KeypointSet&, std::int64_t);

}  // namespace ssp::model
