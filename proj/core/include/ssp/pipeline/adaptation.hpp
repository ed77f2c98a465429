#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ssp/common/grid.hpp"
#include "ssp/geometry/homography.hpp"
#include "ssp/geometry/nms.hpp"
#include "ssp/model/network.hpp"
#include "ssp/synthdata/scene.hpp"

namespace ssp::pipeline {

struct AdaptationConfig {
  int num_homographies = 10;  // N_h, the identity pass included
  float threshold = 0.015f;   // applied to the averaged heatmap
  int nms_radius = 4;
  std::size_t top_k = geom::kNoLimit;
  geom::HomographySampleConfig homography;
  std::uint64_t seed = 0;
  int batch_size = 8;  // warped views per forward pass
  int workers = 1;

  static AdaptationConfig desk();
  static AdaptationConfig paper();
  void validate() const;
};

// Averaged detector heatmap of image `index`: the identity pass plus
// N_h - 1 sampled homographies, each mapped back through its inverse and
// averaged per pixel over the passes in which that pixel was visible.
Image adapted_heatmap(model::Network<float>& net, const Image& image, const AdaptationConfig& config,
                      std::size_t index);

// Threshold + NMS over the adapted heatmap, one keypoint set per image.
std::vector<geom::KeypointSet> homographic_adaptation_label(model::Network<float>& net, std::span<const Image> images,
                                                            const AdaptationConfig& config);

// Copies `samples` with their keypoints replaced by pseudo-labels.
std::vector<synth::ImageSample> label_dataset(model::Network<float>& net, std::span<const synth::ImageSample> samples,
                                              const AdaptationConfig& config);

}  // namespace ssp::pipeline
