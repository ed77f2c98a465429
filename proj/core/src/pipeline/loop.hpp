#pragma once

// Bookkeeping shared by the pretraining and joint-training loops.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ssp/losses/central_dir.hpp"
#include "ssp/model/checkpoint.hpp"
#include "ssp/pipeline/adam.hpp"
#include "ssp/pipeline/train.hpp"

namespace ssp::pipeline::detail {

struct LoopState {
  std::int64_t iteration = 0;  // completed iterations
  std::int64_t skipped = 0;
  std::string phase;
  std::vector<Evaluation> evaluations;
  loss::CentralDirState ct;
};

std::string encode_loop_state(const LoopState& state, const TrainConfig& config);
LoopState decode_loop_state(const std::string& text, const TrainConfig& config);

// Writes the checkpoint and both sidecars; returns the checkpoint path.
std::string write_checkpoint(const RunDir& run, const model::Checkpoint& ckpt, const AdamState& adam,
                             const LoopState& state, const TrainConfig& config);

struct Resumed {
  model::Checkpoint checkpoint;
  AdamState adam;
  LoopState state;
};
Resumed load_resume(const std::string& checkpoint_path, const TrainConfig& config);

class LossMeter {
 public:
  void add(const std::map<std::string, double>& values);
  std::map<std::string, double> means() const;
  void reset() { sums_.clear(), count_ = 0; }

 private:
  std::map<std::string, double> sums_;
  std::int64_t count_ = 0;
};

eval::Aggregate validate(model::Network<float>& net, std::span<const eval::EvalPair> pairs,
                         const eval::EvalConfig& config, bool descriptors);

// Index of the evaluation to return; the latest one when none has metrics.
std::size_t best_index(const std::vector<Evaluation>& evaluations, bool by_repeatability);

void log(const TrainOptions& options, const std::string& line);

template <class T>
bool all_finite(std::span<const T> values) {
  for (T v : values) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

}  // namespace ssp::pipeline::detail
