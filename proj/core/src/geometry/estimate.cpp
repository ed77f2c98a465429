#include "ssp/geometry/estimate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ssp::geom {
namespace {

// Similarity taking the centroid to the origin and the mean distance to sqrt(2).
std::optional<Eigen::Matrix3d> normalizer(std::span<const Point> pts) {
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= pts.size();
  my /= pts.size();
  double mean_dist = 0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - mx, p.y - my);
  mean_dist /= pts.size();
  if (mean_dist < 1e-12) return std::nullopt;
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = t(1, 1) = s;
  t(0, 2) = -s * mx;
  t(1, 2) = -s * my;
  return t;
}

double cross(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool has_collinear_triple(const std::array<Point, 4>& p) {
  constexpr double kMinArea = 1e-6;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (std::abs(cross(p[i], p[j], p[k])) < kMinArea) return true;
      }
    }
  }
  return false;
}

double reprojection_error(const Homography& h, const PointPair& pp) {
  auto q = h.apply(pp.src);
  if (!q) return std::numeric_limits<double>::infinity();
  return std::hypot(q->x - pp.dst.x, q->y - pp.dst.y);
}

std::size_t count_inliers(const Homography& h, std::span<const PointPair> pairs, double threshold,
                          std::vector<bool>* mask) {
  std::size_t n = 0;
  if (mask) mask->assign(pairs.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (reprojection_error(h, pairs[i]) <= threshold) {
      ++n;
      if (mask) (*mask)[i] = true;
    }
  }
  return n;
}

}  // namespace

std::optional<Homography> fit_homography_dlt(std::span<const PointPair> pairs) {
  if (pairs.size() < 4) return std::nullopt;
  std::vector<Point> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& pp : pairs) {
    src.push_back(pp.src);
    dst.push_back(pp.dst);
  }
  const auto t_src = normalizer(src);
  const auto t_dst = normalizer(dst);
  if (!t_src || !t_dst) return std::nullopt;

  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = *t_src * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
    const Eigen::Vector3d q = *t_dst * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd hvec = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);
  const Eigen::Matrix3d m = t_dst->inverse() * hn * *t_src;
  if (!m.allFinite() || std::abs(m(2, 2)) < 1e-12) return std::nullopt;
  if (std::abs((m / m(2, 2)).determinant()) <= kDegenerateDeterminant) return std::nullopt;
  return Homography::from_matrix(m);
}

std::optional<HomographyFit> estimate_homography(std::span<const PointPair> pairs, const RansacConfig& config) {
  const std::size_t n = pairs.size();
  if (n < 4) return std::nullopt;

  Rng rng(config.seed);
  std::optional<Homography> best;
  std::size_t best_count = 0;
  int required = config.max_iterations;
  std::array<std::size_t, 4> idx{};
  std::vector<PointPair> sample(4);

  for (int it = 0; it < std::min(required, config.max_iterations); ++it) {
    // Four distinct indices.
    for (int k = 0; k < 4; ++k) {
      for (;;) {
        idx[k] = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        if (std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k) break;
      }
    }
    std::array<Point, 4> s{}, d{};
    for (int k = 0; k < 4; ++k) {
      sample[k] = pairs[idx[k]];
      s[k] = sample[k].src;
      d[k] = sample[k].dst;
    }
    if (has_collinear_triple(s) || has_collinear_triple(d)) continue;
    auto h = fit_homography_dlt(sample);
    if (!h) continue;
    const std::size_t count = count_inliers(*h, pairs, config.inlier_threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best = h;
      const double ratio = static_cast<double>(count) / n;
      if (ratio >= 1.0) break;
      const double denom = std::log(1.0 - std::pow(ratio, 4));
      if (denom < 0) {
        const double need = std::log(1.0 - config.confidence) / denom;
        required = static_cast<int>(std::min<double>(config.max_iterations, std::ceil(need)));
      }
    }
  }
  if (!best || best_count < 4) return std::nullopt;

  std::vector<bool> mask;
  count_inliers(*best, pairs, config.inlier_threshold, &mask);
  std::vector<PointPair> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) inliers.push_back(pairs[i]);
  }
  HomographyFit fit;
  fit.h = fit_homography_dlt(inliers).value_or(*best);
  fit.inlier_count = count_inliers(fit.h, pairs, config.inlier_threshold, &fit.inliers);
  if (fit.inlier_count < 4) {
    fit.h = *best;
    fit.inlier_count = count_inliers(fit.h, pairs, config.inlier_threshold, &fit.inliers);
  }
  return fit;
}

}  // namespace ssp::geom
