#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssp/eval/eval_set.hpp"
#include "ssp/model/checkpoint.hpp"
#include "ssp/pipeline/run_dir.hpp"
#include "ssp/pipeline/train_config.hpp"
#include "ssp/synthdata/scene.hpp"

namespace ssp::pipeline {

struct TrainOptions {
  const RunDir* run = nullptr;  // nothing is written without one
  // Checkpoint to continue from; its .adam.sspc and .state.json sidecars
  // must sit next to it.
  std::string resume_from;
  std::function<void(const std::string&)> log;
  std::int64_t log_every = 0;  // progress lines between checkpoints; 0 disables
};

struct Evaluation {
  std::int64_t iteration = 0;
  std::string path;  // empty without a run directory
  std::optional<eval::Aggregate> metrics;  // absent without validation pairs
};

struct TrainResult {
  model::Checkpoint best;
  std::int64_t best_iteration = 0;
  std::string best_path;
  std::vector<Evaluation> evaluations;  // one per checkpoint, in order
  std::int64_t skipped_steps = 0;
  std::map<std::string, double> final_losses;  // means over the last interval
  std::optional<std::array<double, 3>> eta;    // learned scalars, when used
};

// Raised on a non-finite loss or learnable scalar. Files written before the
// failing iteration are left in place.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, std::int64_t iteration, std::string last_checkpoint)
      : NumericError(what), iteration_(iteration), last_checkpoint_(std::move(last_checkpoint)) {}
  std::int64_t iteration() const { return iteration_; }
  const std::string& last_checkpoint() const { return last_checkpoint_; }

 private:
  std::int64_t iteration_;
  std::string last_checkpoint_;
};

// Trains the encoder and detector head on labeled synthetic images. The
// returned checkpoint has the best validation repeatability (the latest one
// when `validation` is empty).
TrainResult pretrain_magicpoint(const TrainConfig& config, std::span<const synth::ImageSample> dataset,
                                std::span<const eval::EvalPair> validation, const TrainOptions& options = {});

// Joint detector / descriptor (/ semantic) training on pseudo-labeled
// images with the configured loss-combination strategy. The returned
// checkpoint is chosen by select_best over the validation evaluations.
TrainResult joint_train(const TrainConfig& config, std::span<const synth::ImageSample> dataset,
                        std::span<const eval::EvalPair> validation, const TrainOptions& options = {});

}  // namespace ssp::pipeline
