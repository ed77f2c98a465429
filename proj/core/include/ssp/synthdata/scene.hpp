#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ssp/common/grid.hpp"
#include "ssp/geometry/keypoints.hpp"

namespace ssp::synth {

// Semantic classes; the value doubles as the mask label.
enum class ShapeClass : std::uint8_t {
  Background = 0,
  Line = 1,
  Quadrilateral = 2,
  Triangle = 3,
  Ellipse = 4,
};

inline constexpr int kNumClasses = 5;

const char* class_name(ShapeClass c);

// One placed primitive. Vertices are polygon corners or segment endpoints
// (x = column, y = row); ellipses use center/radii/angle.
struct Primitive {
  ShapeClass kind = ShapeClass::Line;
  std::vector<geom::Point> vertices;
  geom::Point center{};
  double radius_x = 0;
  double radius_y = 0;
  double angle = 0;  // radians, ellipse major axis vs. +x
  double thickness = 2.0;
  float intensity = 1.0f;
};

struct SceneConfig {
  int height = 120;
  int width = 160;
  int min_primitives = 3;
  int max_primitives = 7;
  // Indexed by ShapeClass - 1 (line, quadrilateral, triangle, ellipse).
  std::array<bool, 4> enabled{true, true, true, true};
  float background_min = 0.0f;
  float background_max = 0.5f;
  float foreground_min = 0.0f;
  float foreground_max = 1.0f;
  float min_contrast = 0.25f;
  double noise_sigma = 0.02;
  double min_keypoint_separation = 5.0;
  // When non-empty these primitives are drawn (in order) instead of random
  // ones; the background and noise are still drawn from the seed.
  std::vector<Primitive> fixed_primitives;

  void validate() const;  // throws ConfigError
};

struct ImageSample {
  Image image;
  geom::KeypointSet keypoints;  // score 1 each
  ClassMask mask;
  std::uint64_t seed = 0;
  std::vector<Primitive> scene;  // not persisted by the dataset file
};

// Pure function of (config, seed). Later primitives occlude earlier ones;
// keypoints whose pixel is touched by a later primitive are removed.
ImageSample render_scene(const SceneConfig& config, std::uint64_t seed);

// Class of the 8x8 block by majority vote (ties to the lower class index).
ClassMask downsample_majority(const ClassMask& mask, int cell = 8);

}  // namespace ssp::synth
