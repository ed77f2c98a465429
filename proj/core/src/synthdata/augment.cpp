#include "ssp/synthdata/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssp::synth {
namespace {

// Separable Gaussian with clamped borders.
void gaussian_blur(Image& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= total;

  const int H = img.height, W = img.width;
  std::vector<float> tmp(img.values.size());
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(r, std::clamp(c + i, 0, W - 1));
      tmp[static_cast<std::size_t>(r) * W + c] = static_cast<float>(acc);
    }
  }
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[i + radius] * tmp[static_cast<std::size_t>(std::clamp(r + i, 0, H - 1)) * W + c];
      }
      img.at(r, c) = static_cast<float>(acc);
    }
  }
}

}  // namespace

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.noise_sigma = 0;
  c.brightness_min = c.brightness_max = 0;
  c.contrast_min = c.contrast_max = 1;
  c.blur_probability = 0;
  return c;
}

void AugmentConfig::validate() const {
  if (noise_sigma < 0) throw ConfigError("augment.noise_sigma", "must be >= 0");
  if (brightness_min > brightness_max) throw ConfigError("augment.brightness", "min exceeds max");
  if (contrast_min > contrast_max || contrast_min < 0) throw ConfigError("augment.contrast", "invalid range");
  if (blur_probability < 0 || blur_probability > 1) throw ConfigError("augment.blur_probability", "must be in [0, 1]");
  if (blur_sigma_min <= 0 || blur_sigma_min > blur_sigma_max) throw ConfigError("augment.blur_sigma", "invalid range");
}

Image photometric_augment(const Image& image, Rng& rng, const AugmentConfig& config) {
  config.validate();
  Image out = image;
  const double contrast = uniform(rng, config.contrast_min, config.contrast_max);
  const double brightness = uniform(rng, config.brightness_min, config.brightness_max);
  const bool blur = config.blur_probability > 0 && uniform(rng, 0.0, 1.0) < config.blur_probability;

  if (contrast != 1.0 && !out.values.empty()) {
    const double mean =
        std::accumulate(out.values.begin(), out.values.end(), 0.0) / static_cast<double>(out.values.size());
    for (auto& v : out.values) v = static_cast<float>(mean + (v - mean) * contrast);
  }
  if (brightness != 0.0) {
    for (auto& v : out.values) v = static_cast<float>(v + brightness);
  }
  if (blur) gaussian_blur(out, uniform(rng, config.blur_sigma_min, config.blur_sigma_max));
  if (config.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (auto& v : out.values) v = static_cast<float>(v + noise(rng));
  }
  for (auto& v : out.values) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

ImageSample photometric_augment(const ImageSample& sample, Rng& rng, const AugmentConfig& config) {
  ImageSample out = sample;
  out.image = photometric_augment(sample.image, rng, config);
  return out;
}

}  // namespace ssp::synth
