#pragma once

// Independent reference computations for test assertions. None of these
// call into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace ssp::testing {

inline double combo_norm2(const std::vector<std::vector<double>>& u, const std::vector<double>& w) {
  std::vector<double> p(u[0].size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) p[j] += w[i] * u[i][j];
  }
  double s = 0;
  for (double x : p) s += x * x;
  return s;
}

// Minimizer of ||sum w_i u_i||^2 over the 2- or 3-simplex by dense grid
// search, repeatedly zooming a fixed-size grid in on the best node until
// the spacing drops below 1e-9. Ties keep the node closest to uniform.
inline std::vector<double> simplex_grid_min(const std::vector<std::vector<double>>& u) {
  const std::size_t k = u.size();
  const int steps = 200;
  std::vector<double> lo(k - 1, 0.0), hi(k - 1, 1.0);
  std::vector<double> best(k, 1.0 / static_cast<double>(k));
  for (int level = 0; level < 12; ++level) {
    double best_val = std::numeric_limits<double>::infinity();
    double best_tie = std::numeric_limits<double>::infinity();
    std::vector<double> level_best = best;
    const auto visit = [&](const std::vector<double>& w) {
      const double v = combo_norm2(u, w);
      double tie = 0;
      for (double x : w) tie += (x - 1.0 / k) * (x - 1.0 / k);
      if (v < best_val - 1e-15 || (std::abs(v - best_val) <= 1e-15 && tie < best_tie)) {
        best_val = v;
        best_tie = tie;
        level_best = w;
      }
    };
    if (k == 2) {
      for (int a = 0; a <= steps; ++a) {
        const double w0 = lo[0] + (hi[0] - lo[0]) * a / steps;
        if (w0 < 0 || w0 > 1) continue;
        visit({w0, 1 - w0});
      }
    } else {
      for (int a = 0; a <= steps; ++a) {
        for (int b = 0; b <= steps; ++b) {
          const double w0 = lo[0] + (hi[0] - lo[0]) * a / steps;
          const double w1 = lo[1] + (hi[1] - lo[1]) * b / steps;
          if (w0 < 0 || w1 < 0 || w0 + w1 > 1 + 1e-15) continue;
          visit({w0, w1, std::max(0.0, 1 - w0 - w1)});
        }
      }
    }
    best = level_best;
    for (std::size_t d = 0; d + 1 < k; ++d) {
      const double span = 4 * (hi[d] - lo[d]) / steps;
      lo[d] = best[d] - span;
      hi[d] = best[d] + span;
    }
    if (hi[0] - lo[0] < 1e-9) break;
  }
  return best;
}

// Average precision over a ranked correctness list, spelled out.
inline double reference_ap(const std::vector<bool>& ranked) {
  double hits = 0, sum = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!ranked[i]) continue;
    hits += 1;
    sum += hits / static_cast<double>(i + 1);
  }
  return hits > 0 ? sum / hits : 0.0;
}

}  // namespace ssp::testing
