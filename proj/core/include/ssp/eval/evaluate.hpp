#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssp/eval/eval_set.hpp"
#include "ssp/eval/metrics.hpp"
#include "ssp/model/network.hpp"

namespace ssp::eval {

struct EvalConfig {
  std::size_t top_k = 300;
  int nms_radius = 4;
  float detection_threshold = 0.015f;
  double epsilon = 3.0;
  std::array<double, 3> he_thresholds{1.0, 3.0, 5.0};
  geom::RansacConfig ransac{};
  std::uint64_t seed = 0;  // RANSAC seed base; pair i uses derive_seed(seed, i)
  int workers = 1;
  bool descriptors = true;  // false: detector-only metrics (Rep., MLE)

  void validate() const;
};

struct PairMetrics {
  std::size_t index = 0;
  PairKind kind = PairKind::Viewpoint;
  std::size_t keypoints_a = 0;
  std::size_t keypoints_b = 0;
  std::optional<double> repeatability;
  std::optional<double> mle;
  std::optional<double> nn_map;
  std::optional<double> matching_score;
  std::array<bool, 3> he_correct{};
  std::optional<double> corner_error;
  bool estimation_failed = false;
  std::size_t degenerate_descriptors = 0;
};

struct Aggregate {
  double he[3] = {0, 0, 0};
  double repeatability = 0;
  double mle = 0;
  double nn_map = 0;
  double matching_score = 0;
};

struct MetricReport {
  std::string model;
  EvalConfig config;
  std::vector<PairMetrics> pairs;
  Aggregate mean;
  std::size_t repeatability_skipped = 0;
  std::size_t mle_excluded = 0;
  std::size_t nn_map_flagged = 0;
  std::size_t matching_skipped = 0;
  std::size_t estimation_failures = 0;
};

struct Detection {
  geom::KeypointSet keypoints;
  model::DescriptorSet descriptors;
};

// Eval-mode forward of one image: heatmap -> NMS -> top-k, then descriptor
// sampling at the detections.
Detection detect(model::Network<float>& net, const Image& image, const EvalConfig& config);

// Throws ssp::Error on an empty pair set.
MetricReport evaluate_model(model::Network<float>& net, std::span<const EvalPair> pairs, const EvalConfig& config,
                            const std::string& model_name = "model");

}  // namespace ssp::eval
