#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssp/autodiff/tensor.hpp"

namespace ssp::pipeline {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  void validate() const;
};

// Moments are kept in double so resumed runs continue bit-exactly.
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::int64_t skipped = 0;  // steps rejected for non-finite gradients
  std::vector<std::string> names;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// Zeroed moments matching `params` (names taken from the tensors).
template <class T>
AdamState make_adam_state(std::span<const ad::Tensor<T>> params, const AdamConfig& config = {});

// One bias-corrected Adam update from each tensor's accumulated gradient
// (a tensor without a gradient counts as g = 0). If any gradient entry is
// non-finite nothing is modified, `skipped` is incremented and false is
// returned.
template <class T>
bool adam_step(std::span<ad::Tensor<T>> params, AdamState& state, double lr);

// "SSPA" | u16 version | u64 step | u64 skipped | 3 f64 config | u32 count |
// per tensor: name | u64 size | m f64s | v f64s
std::vector<std::uint8_t> encode_adam_state(const AdamState& state);
AdamState decode_adam_state(std::span<const std::uint8_t> bytes);

// Throws FormatError unless `state` was built for exactly these tensors.
template <class T>
void check_adam_state(const AdamState& state, std::span<const ad::Tensor<T>> params);

}  // namespace ssp::pipeline
