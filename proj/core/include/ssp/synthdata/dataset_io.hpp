#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssp/synthdata/scene.hpp"

namespace ssp::synth {

inline constexpr std::uint16_t kDatasetVersion = 1;

// "SSPD" | u16 version | u64 count | records:
//   u64 seed | u16 H | u16 W | H*W f32 image | u32 n | n * (f32 row, f32 col, f32 score) | H*W u8 mask
std::vector<std::uint8_t> encode_dataset(std::span<const ImageSample> samples);
// Throws FormatError naming the record and field.
std::vector<ImageSample> decode_dataset(std::span<const std::uint8_t> bytes);

void write_dataset(std::span<const ImageSample> samples, const std::string& path);
std::vector<ImageSample> read_dataset(const std::string& path);

}  // namespace ssp::synth
