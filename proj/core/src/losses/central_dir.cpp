#include "ssp/losses/central_dir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "ssp/common/error.hpp"

namespace ssp::loss {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Exact minimizer of w^T G w over the simplex for a handful of tasks: the
// optimum lies in the relative interior of some face, so solve the
// equality-constrained problem on every face and keep the best feasible
// solution. Singular faces (parallel gradients) take the minimum-norm
// solution, which spreads weight evenly across the duplicates.
std::vector<double> min_norm_by_faces(const Eigen::MatrixXd& gram) {
  const auto k = static_cast<int>(gram.rows());
  std::vector<double> best(k, 1.0 / k);
  double best_val = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> face;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) face.push_back(i);
    const auto n = static_cast<int>(face.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) kkt(a, b) = gram(face[a], face[b]);
      kkt(a, n) = kkt(n, a) = 1.0;
    }
    rhs(n) = 1.0;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if (!(kkt * sol - rhs).isZero(1e-9)) continue;
    if ((sol.head(n).array() < -1e-12).any()) continue;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    for (int a = 0; a < n; ++a) w(face[a]) = std::max(0.0, sol(a));
    w /= w.sum();
    const double val = w.dot(gram * w);
    // Ties keep the face seen first in mask order.
    if (val < best_val - 1e-15) {
      best_val = val;
      best.assign(w.data(), w.data() + k);
    }
  }
  return best;
}

}  // namespace

void CentralDirConfig::validate() const {
  if (alpha < 0) throw ConfigError("central_dir.alpha", "must be >= 0");
  if (window < 1) throw ConfigError("central_dir.window", "must be >= 1");
  if (max_iterations < 1) throw ConfigError("central_dir.max_iterations", "must be >= 1");
}

std::vector<double> min_norm_weights(std::span<const std::vector<double>> v, const CentralDirConfig& config) {
  const std::size_t k = v.size();
  if (k == 0) return {};
  if (k == 1) return {1.0};

  std::vector<double> gram(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) gram[i * k + j] = gram[j * k + i] = dot(v[i], v[j]);
  }
  auto g = [&](std::size_t i, std::size_t j) { return gram[i * k + j]; };

  if (k == 2) {
    // min over t of ||t v0 + (1 - t) v1||^2.
    const double denom = g(0, 0) - 2 * g(0, 1) + g(1, 1);
    if (denom <= 1e-15 * std::max(g(0, 0), g(1, 1))) return {0.5, 0.5};
    const double t = std::clamp((g(1, 1) - g(0, 1)) / denom, 0.0, 1.0);
    return {t, 1.0 - t};
  }

  if (k <= 8) {
    Eigen::MatrixXd gm(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) gm(i, j) = g(i, j);
    return min_norm_by_faces(gm);
  }

  // Many tasks: Frank-Wolfe with exact line search.
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  std::vector<double> mw(k);
  for (int it = 0; it < config.max_iterations; ++it) {
    for (std::size_t i = 0; i < k; ++i) {
      mw[i] = 0;
      for (std::size_t j = 0; j < k; ++j) mw[i] += g(i, j) * w[j];
    }
    const double wmw = std::inner_product(w.begin(), w.end(), mw.begin(), 0.0);
    const std::size_t t = static_cast<std::size_t>(std::min_element(mw.begin(), mw.end()) - mw.begin());
    if (2.0 * (wmw - mw[t]) < config.gap_tolerance) break;
    // Exact line search between the current point and vertex t.
    const double denom = wmw - 2 * mw[t] + g(t, t);
    if (denom <= 0) break;
    const double gamma = std::clamp((wmw - mw[t]) / denom, 0.0, 1.0);
    for (std::size_t i = 0; i < k; ++i) w[i] *= 1.0 - gamma;
    w[t] += gamma;
  }
  return w;
}

CentralDirResult central_dir_weights(std::span<const std::vector<double>> gradients, const CentralDirConfig& config,
                                     CentralDirState& state) {
  config.validate();
  const std::size_t k = gradients.size();
  if (k < 2) throw Error("central_dir_weights needs at least two task gradients");
  const std::size_t dim = gradients[0].size();
  for (const auto& g : gradients) {
    if (g.size() != dim) throw ShapeError("central_dir_weights: task gradients differ in length");
  }
  if (state.history.size() != k) state.history.assign(k, {});

  CentralDirResult res;
  res.weights.assign(k, 0.0);
  res.min_norm_weights.assign(k, 0.0);
  res.raw_norms.resize(k);
  res.tension.assign(k, 1.0);
  res.combined.assign(dim, 0.0);

  std::vector<std::size_t> active;
  std::vector<std::vector<double>> unit;
  for (std::size_t i = 0; i < k; ++i) {
    const double norm = std::sqrt(dot(gradients[i], gradients[i]));
    if (!std::isfinite(norm)) throw NumericError("task " + std::to_string(i) + " gradient is not finite");
    res.raw_norms[i] = norm;
    if (norm <= config.zero_norm) {
      ++res.excluded;
      continue;
    }
    active.push_back(i);
    std::vector<double> u(dim);
    for (std::size_t j = 0; j < dim; ++j) u[j] = gradients[i][j] / norm;
    unit.push_back(std::move(u));
  }
  if (active.empty()) return res;

  std::vector<double> w = min_norm_weights(unit, config);
  std::vector<double> point(dim, 0.0);
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t j = 0; j < dim; ++j) point[j] += w[a] * unit[a][j];
  }
  if (std::sqrt(dot(point, point)) < config.degenerate_norm) {
    res.degenerate = true;
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(active.size()));
  }
  for (std::size_t a = 0; a < active.size(); ++a) res.min_norm_weights[active[a]] = w[a];

  // Tension: favour tasks whose gradient norm grows against their history.
  double total = 0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto& hist = state.history[active[a]];
    if (!hist.empty()) {
      const double mean = std::accumulate(hist.begin(), hist.end(), 0.0) / static_cast<double>(hist.size());
      if (mean > 0) res.tension[active[a]] = res.raw_norms[active[a]] / mean;
    }
    w[a] *= 1.0 + config.alpha * std::max(0.0, res.tension[active[a]] - 1.0);
    total += w[a];
  }
  for (double& x : w) x /= total;

  std::fill(point.begin(), point.end(), 0.0);
  double mean_norm = 0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    res.weights[active[a]] = w[a];
    mean_norm += res.raw_norms[active[a]];
    for (std::size_t j = 0; j < dim; ++j) point[j] += w[a] * unit[a][j];
  }
  mean_norm /= static_cast<double>(active.size());
  const double pn = std::sqrt(dot(point, point));
  // A degenerate point is scaled, not renormalized, so noise is not blown up.
  const double factor = res.degenerate || pn == 0 ? mean_norm : mean_norm / pn;
  for (std::size_t j = 0; j < dim; ++j) res.combined[j] = point[j] * factor;

  for (std::size_t i : active) {
    auto& hist = state.history[i];
    hist.push_back(res.raw_norms[i]);
    while (static_cast<int>(hist.size()) > config.window) hist.pop_front();
  }
  return res;
}

}  // namespace ssp::loss
