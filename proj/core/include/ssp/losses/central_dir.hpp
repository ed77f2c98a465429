#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace ssp::loss {

struct CentralDirConfig {
  double alpha = 0.3;  // tension sensitivity
  int window = 50;     // T, iterations of norm history
  int max_iterations = 200;      // Frank-Wolfe cap (more than eight tasks)
  double gap_tolerance = 1e-10;  // Frank-Wolfe duality-gap stop
  double zero_norm = 1e-20;        // gradients below this norm are excluded
  double degenerate_norm = 1e-6;   // min-norm point treated as zero

  void validate() const;
};

// Per-task ring buffers of raw gradient norms.
struct CentralDirState {
  std::vector<std::deque<double>> history;
};

struct CentralDirResult {
  std::vector<double> weights;           // final convex weights, 0 for excluded tasks
  std::vector<double> min_norm_weights;  // before the tension adjustment
  std::vector<double> raw_norms;
  std::vector<double> tension;           // r_i
  std::vector<double> combined;
  std::size_t excluded = 0;
  bool degenerate = false;
};

// Minimizes ||sum_i w_i u_i||^2 over the simplex for the given vectors.
// Closed form for two vectors (0.5 / 0.5 when they coincide), exact face
// enumeration up to eight, Frank-Wolfe from the uniform point beyond that.
std::vector<double> min_norm_weights(std::span<const std::vector<double>> vectors, const CentralDirConfig& config);

// Normalizes each task gradient, finds the min-norm convex combination,
// applies the tension adjustment against the norm history, and returns the
// combined direction rescaled to the mean raw norm. Updates state.history.
CentralDirResult central_dir_weights(std::span<const std::vector<double>> gradients, const CentralDirConfig& config,
                                     CentralDirState& state);

}  // namespace ssp::loss
