#pragma once

#include <functional>
#include <span>
#include <string>

#include "ssp/autodiff/tensor.hpp"

namespace ssp::ad {

struct GradCheckReport {
  bool passed = false;
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::string worst_param;   // name (or "#index") of the worst element's tensor
  std::size_t worst_index = 0;
  std::size_t elements_checked = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, denominator_floor); the floor
  // keeps near-zero gradients from turning rounding noise into large ratios.
  double denominator_floor = 1e-3;
};

// Compares the reverse-mode gradient of scalar f() w.r.t. each params
// element against the central difference (f(p+h) - f(p-h)) / 2h. f must be
// deterministic and read the params tensors by reference. Report-only: the
// caller decides what to do with a failure.
GradCheckReport finite_diff_check(const std::function<Tensor<double>()>& f, std::span<Tensor<double>> params,
                                  const GradCheckOptions& options = {});

}  // namespace ssp::ad
