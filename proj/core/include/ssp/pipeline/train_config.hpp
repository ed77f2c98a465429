#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ssp/eval/evaluate.hpp"
#include "ssp/geometry/homography.hpp"
#include "ssp/losses/central_dir.hpp"
#include "ssp/losses/combine.hpp"
#include "ssp/losses/correspondence.hpp"
#include "ssp/losses/task_losses.hpp"
#include "ssp/model/network.hpp"
#include "ssp/pipeline/adam.hpp"
#include "ssp/pipeline/schedule.hpp"
#include "ssp/synthdata/augment.hpp"

namespace ssp::pipeline {

enum class Stage { Pretrain, Joint };

// How the joint-training task losses are combined.
enum class Strategy {
  Uniform,      // fixed weights
  Uncertainty,  // learned eta scalars
  CentralDir,   // min-norm direction over shared-encoder gradients
};

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);
std::string_view strategy_name(Strategy strategy);  // "uni", "unc", "ct"
Strategy parse_strategy(std::string_view name);

struct TrainConfig {
  Stage stage = Stage::Joint;
  std::int64_t iterations = 10000;
  int batch_size = 16;
  LrSchedule lr;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_interval = 500;
  Strategy strategy = Strategy::Uniform;
  model::ModelConfig model;

  loss::DetectorLossKind detector_loss = loss::DetectorLossKind::LiteralBce;
  loss::LossWeights weights;
  loss::HingeConfig hinge;
  loss::CorrespondenceConfig correspondence;
  std::vector<double> class_weights;  // empty: all classes weighted 1
  double eta_detector = loss::kInitialEtaDetector;
  double eta_descriptor = loss::kInitialEtaDescriptor;
  double eta_semantic = loss::kInitialEtaSemantic;
  loss::CentralDirConfig central_dir;
  // Central-dir runs train with the uncertainty loss for this fraction of
  // the iterations first, then switch with a fresh optimizer and a
  // restarted learning-rate schedule. 0 starts central-dir from scratch.
  double warm_start_fraction = 0.5;

  // Pretraining warps each sample by a random homography when set.
  bool homographic_augmentation = true;
  geom::HomographySampleConfig homography;
  synth::AugmentConfig photometric;

  // Validation at every checkpoint.
  eval::EvalConfig validation;
  int workers = 1;

  void validate() const;  // throws ConfigError
  // Iteration at which a central-dir run leaves the warm-start phase.
  std::int64_t switch_iteration() const;
};

}  // namespace ssp::pipeline
