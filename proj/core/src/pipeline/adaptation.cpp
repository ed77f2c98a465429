#include "ssp/pipeline/adaptation.hpp"

#include <algorithm>

#include "ssp/autodiff/tensor.hpp"
#include "ssp/common/parallel.hpp"
#include "ssp/common/rng.hpp"
#include "ssp/geometry/warp.hpp"
#include "ssp/model/postprocess.hpp"

namespace ssp::pipeline {

AdaptationConfig AdaptationConfig::desk() { return {}; }

AdaptationConfig AdaptationConfig::paper() {
  AdaptationConfig c;
  c.num_homographies = 100;
  return c;
}

void AdaptationConfig::validate() const {
  if (num_homographies < 1) throw ConfigError("adaptation.num_homographies", "must be >= 1");
  if (nms_radius < 0) throw ConfigError("adaptation.nms_radius", "must be >= 0");
  if (batch_size < 1) throw ConfigError("adaptation.batch_size", "must be >= 1");
  if (workers < 1) throw ConfigError("adaptation.workers", "must be >= 1");
  if (top_k == 0) throw ConfigError("adaptation.top_k", "must be > 0");
  homography.validate();
}

Image adapted_heatmap(model::Network<float>& net, const Image& image, const AdaptationConfig& cfg,
                      std::size_t index) {
  cfg.validate();
  const int h = image.height, w = image.width;
  Rng rng(derive_seed(cfg.seed, index));
  std::vector<geom::Homography> homs{geom::Homography::identity()};
  for (int k = 1; k < cfg.num_homographies; ++k) homs.push_back(geom::sample_homography(cfg.homography, h, w, rng));

  std::vector<double> sum(image.size(), 0.0);
  std::vector<double> count(image.size(), 0.0);
  ad::NoGradGuard no_grad;
  const std::size_t pixels = image.size();
  for (std::size_t first = 0; first < homs.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t n = std::min(homs.size() - first, static_cast<std::size_t>(cfg.batch_size));
    std::vector<float> batch(n * pixels);
    for (std::size_t k = 0; k < n; ++k) {
      const Image warped = geom::warp_image(image, homs[first + k], h, w);
      std::copy(warped.values.begin(), warped.values.end(), batch.begin() + static_cast<std::ptrdiff_t>(k * pixels));
    }
    const auto x = ad::Tensor<float>::from({static_cast<std::int64_t>(n), 1, h, w}, std::move(batch));
    const auto logits = net.detector_head(net.encoder_forward(x, model::Mode::Eval), model::Mode::Eval);
    for (std::size_t k = 0; k < n; ++k) {
      const auto inv = homs[first + k].inverse();
      const Image back = geom::warp_image(model::extract_heatmap(logits, static_cast<std::int64_t>(k)), inv, h, w);
      const auto valid = geom::warp_valid_mask(inv, h, w, h, w);
      for (std::size_t p = 0; p < pixels; ++p) {
        if (!valid.values[p]) continue;
        sum[p] += back.values[p];
        count[p] += 1.0;
      }
    }
  }
  Image out(h, w, 0.0f);
  for (std::size_t p = 0; p < pixels; ++p) {
    if (count[p] > 0) out.values[p] = static_cast<float>(sum[p] / count[p]);
  }
  return out;
}

std::vector<geom::KeypointSet> homographic_adaptation_label(model::Network<float>& net, std::span<const Image> images,
                                                            const AdaptationConfig& cfg) {
  cfg.validate();
  std::vector<geom::KeypointSet> out(images.size());
  parallel_for(images.size(), cfg.workers, [&](std::size_t i) {
    out[i] = geom::nms(adapted_heatmap(net, images[i], cfg, i), cfg.nms_radius, cfg.threshold, cfg.top_k);
  });
  return out;
}

std::vector<synth::ImageSample> label_dataset(model::Network<float>& net, std::span<const synth::ImageSample> samples,
                                              const AdaptationConfig& cfg) {
  std::vector<Image> images;
  images.reserve(samples.size());
  for (const auto& s : samples) images.push_back(s.image);
  auto labels = homographic_adaptation_label(net, images, cfg);
  std::vector<synth::ImageSample> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].keypoints = std::move(labels[i]);
  return out;
}

}  // namespace ssp::pipeline
