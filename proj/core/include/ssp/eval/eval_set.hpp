#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssp/common/grid.hpp"
#include "ssp/geometry/homography.hpp"
#include "ssp/synthdata/augment.hpp"
#include "ssp/synthdata/scene.hpp"

namespace ssp::eval {

enum class PairKind : std::uint8_t { Illumination, Viewpoint };

struct EvalPair {
  Image a;
  Image b;
  geom::Homography h;  // maps A pixel coordinates to B
  PairKind kind = PairKind::Viewpoint;
  std::uint64_t seed = 0;
};

struct EvalSetConfig {
  synth::SceneConfig scene;
  geom::HomographySampleConfig homography;
  synth::AugmentConfig photometric;
  // Applied to both images of illumination pairs on top of `photometric`.
  double illumination_brightness = 0.25;
  double illumination_contrast = 0.35;
};

// Even indices are illumination pairs (B = photometric(A), H = identity),
// odd indices viewpoint pairs (B = photometric(warp_image(A, H))). Pair i
// uses seeds derived from (seed, i) only.
std::vector<EvalPair> make_eval_set(const EvalSetConfig& config, std::size_t count, std::uint64_t seed);

// "SSPE" | u16 version | u64 count | per pair: u8 kind | u64 seed | 9 f64 H
// (row-major) | u16 H | u16 W | image A f32 | image B f32
std::vector<std::uint8_t> encode_eval_set(const std::vector<EvalPair>& pairs);
std::vector<EvalPair> decode_eval_set(std::span<const std::uint8_t> bytes);
void write_eval_set(const std::vector<EvalPair>& pairs, const std::string& path);
std::vector<EvalPair> read_eval_set(const std::string& path);

}  // namespace ssp::eval
