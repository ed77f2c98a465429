#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssp/eval/evaluate.hpp"

namespace ssp::pipeline {

// Layout of one training run:
//   config.toml                      resolved configuration snapshot
//   checkpoints/iter_<n>.sspc        model weights (+ learnable loss scalars)
//   checkpoints/iter_<n>.adam.sspc   optimizer moments
//   checkpoints/iter_<n>.state.json  loop state needed to resume
//   checkpoints/best.sspc            selected checkpoint
//   labels/<dataset>.sspd            pseudo-labeled datasets
//   logs/metrics.jsonl               one object per evaluation
//   manifest.json                    command, config, paths, timings
class RunDir {
 public:
  explicit RunDir(std::string root);  // creates the directory tree

  const std::string& root() const { return root_; }
  std::string checkpoint_path(std::int64_t iteration) const;
  std::string adam_path(std::int64_t iteration) const;
  std::string state_path(std::int64_t iteration) const;
  std::string best_path() const;
  std::string labels_path(const std::string& dataset) const;
  std::string metrics_path() const;
  std::string config_path() const;
  std::string manifest_path() const;

  void append_metrics(const std::string& json_line) const;
  // Drops metrics lines past `iteration` (used when resuming).
  void truncate_metrics(std::int64_t iteration) const;

 private:
  std::string root_;
};

// Sidecar paths for an arbitrary checkpoint path "x.sspc".
std::string adam_sidecar(const std::string& checkpoint_path);
std::string state_sidecar(const std::string& checkpoint_path);

struct MetricsRecord {
  std::int64_t iteration = 0;
  std::string stage;  // "pretrain", "joint", "joint/ct" ...
  double lr = 0;
  std::map<std::string, double> losses;  // interval means
  std::optional<std::array<double, 3>> eta;
  std::vector<double> ct_weights;
  std::optional<eval::Aggregate> metrics;
  std::int64_t skipped_steps = 0;
};

std::string metrics_json(const MetricsRecord& record);

}  // namespace ssp::pipeline
