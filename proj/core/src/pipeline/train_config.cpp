#include "ssp/pipeline/train_config.hpp"

#include <cmath>
#include <string>

namespace ssp::pipeline {

std::string_view stage_name(Stage stage) { return stage == Stage::Pretrain ? "pretrain" : "joint"; }

Stage parse_stage(std::string_view name) {
  if (name == "pretrain") return Stage::Pretrain;
  if (name == "joint") return Stage::Joint;
  throw ConfigError("train.stage", "expected 'pretrain' or 'joint', got '" + std::string(name) + "'");
}

std::string_view strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::Uniform: return "uni";
    case Strategy::Uncertainty: return "unc";
    case Strategy::CentralDir: return "ct";
  }
  return "uni";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "uni") return Strategy::Uniform;
  if (name == "unc") return Strategy::Uncertainty;
  if (name == "ct") return Strategy::CentralDir;
  throw ConfigError("train.strategy", "expected 'uni', 'unc' or 'ct', got '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (iterations <= 0) throw ConfigError("train.iterations", "must be > 0");
  if (batch_size <= 0) throw ConfigError("train.batch_size", "must be > 0");
  if (checkpoint_interval <= 0) throw ConfigError("train.checkpoint_interval", "must be > 0");
  if (workers < 1) throw ConfigError("train.workers", "must be >= 1");
  if (!(warm_start_fraction >= 0 && warm_start_fraction < 1)) {
    throw ConfigError("train.warm_start_fraction", "must lie in [0, 1)");
  }
  for (double eta : {eta_detector, eta_descriptor, eta_semantic}) {
    if (!std::isfinite(eta)) throw ConfigError("train.eta", "initial values must be finite");
  }
  for (double w : class_weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw ConfigError("train.class_weights", "must be finite and >= 0");
  }
  if (!class_weights.empty() && static_cast<int>(class_weights.size()) != model.num_classes) {
    throw ConfigError("train.class_weights", "needs one entry per semantic class");
  }
  lr.validate();
  adam.validate();
  model.validate();
  weights.validate();
  hinge.validate();
  correspondence.validate();
  central_dir.validate();
  homography.validate();
  photometric.validate();
  validation.validate();
}

std::int64_t TrainConfig::switch_iteration() const {
  if (strategy != Strategy::CentralDir) return 0;
  return static_cast<std::int64_t>(std::floor(static_cast<double>(iterations) * warm_start_fraction));
}

}  // namespace ssp::pipeline
