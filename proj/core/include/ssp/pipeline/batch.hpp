#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssp/autodiff/tensor.hpp"
#include "ssp/geometry/homography.hpp"
#include "ssp/losses/correspondence.hpp"
#include "ssp/pipeline/train_config.hpp"
#include "ssp/synthdata/scene.hpp"

namespace ssp::pipeline {

// Independent random streams. Every per-item draw is seeded from
// (stream seed, iteration * batch + item), so any iteration can be rebuilt
// without replaying earlier ones and adding a consumer to one stream never
// shifts another.
enum class Stream : std::uint64_t {
  Batch = 1,
  Homography = 2,
  Photometric = 3,
  Negatives = 4,
  Init = 5,
  Validation = 6,
  Adaptation = 7,
  Evaluation = 8,
  Data = 9,
};

std::uint64_t stream_seed(std::uint64_t seed, Stream stream);
std::uint64_t item_seed(std::uint64_t seed, Stream stream, std::int64_t iteration, int batch_size, int item);

struct PretrainBatch {
  ad::Tensor<float> images;           // [B, 1, H, W]
  std::vector<std::int32_t> targets;  // B * Hc * Wc detector channels
  std::vector<geom::KeypointSet> keypoints;
};

// Homographic (when enabled) and photometric augmentation with the labels
// warped alongside the image.
PretrainBatch make_pretrain_batch(std::span<const synth::ImageSample> dataset, const TrainConfig& config,
                                  std::int64_t iteration);

struct JointBatch {
  int batch_size = 0;
  ad::Tensor<float> images;            // [2B, 1, H, W]: B first views, then B warped views
  std::vector<std::int32_t> targets1;  // B * Hc * Wc
  std::vector<std::int32_t> targets2;
  std::vector<std::uint8_t> labels1;  // B * Hc * Wc semantic classes
  std::vector<std::uint8_t> labels2;
  std::vector<loss::CorrespondenceSet> correspondences;
  std::vector<geom::Homography> homographies;
};

JointBatch make_joint_batch(std::span<const synth::ImageSample> dataset, const TrainConfig& config,
                            std::int64_t iteration);

}  // namespace ssp::pipeline
