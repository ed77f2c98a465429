#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssp/autodiff/tensor.hpp"
#include "ssp/model/network.hpp"

namespace ssp::model {

inline constexpr std::uint16_t kCheckpointVersion = 1;

// "SSPC" | u16 version | config block | u32 tensor count | tensors:
//   u32 name length | name bytes | u32 rank | rank * u32 extents | f32 payload
// Config block: u32 c_enc, desc_dim, num_classes, head_width, u32 width count
// + widths, u32 flags (bit 0: semantic head).
struct Checkpoint {
  ModelConfig config;
  std::vector<std::pair<std::string, ad::Tensor<float>>> tensors;

  const ad::Tensor<float>* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Every network tensor (weights and running statistics) in declaration
// order, followed by `extra` (e.g. learnable loss scalars).
Checkpoint snapshot(const Network<float>& net, std::vector<std::pair<std::string, ad::Tensor<float>>> extra = {});

// Copies values by name into `net`; throws FormatError on a missing tensor,
// ConfigError on a config mismatch, ShapeError on a shape mismatch.
void restore(Network<float>& net, const Checkpoint& ckpt);

// Builds a network from the checkpoint's own config.
Network<float> instantiate(const Checkpoint& ckpt);

}  // namespace ssp::model
