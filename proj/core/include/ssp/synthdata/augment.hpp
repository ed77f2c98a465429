#pragma once

#include "ssp/common/rng.hpp"
#include "ssp/synthdata/scene.hpp"

namespace ssp::synth {

// Photometric perturbations only; geometry goes through geom::warp_image so
// labels can be transformed exactly.
struct AugmentConfig {
  double noise_sigma = 0.02;
  double brightness_min = -0.15;
  double brightness_max = 0.15;
  double contrast_min = 0.7;  // factor about the image mean
  double contrast_max = 1.3;
  double blur_probability = 0.2;
  double blur_sigma_min = 0.5;
  double blur_sigma_max = 1.0;

  static AugmentConfig none();
  void validate() const;
};

// Contrast, brightness, blur, noise, then clamp to [0, 1]. Labels untouched.
ImageSample photometric_augment(const ImageSample& sample, Rng& rng, const AugmentConfig& config);
Image photometric_augment(const Image& image, Rng& rng, const AugmentConfig& config);

}  // namespace ssp::synth
