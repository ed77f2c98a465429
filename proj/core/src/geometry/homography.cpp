#include "ssp/geometry/homography.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ssp/common/error.hpp"

namespace ssp::geom {

Homography Homography::from_matrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw Error("homography has non-finite entries");
  if (std::abs(m(2, 2)) < 1e-12) throw Error("homography cannot be normalized: bottom-right entry is ~0");
  Eigen::Matrix3d n = m / m(2, 2);
  if (std::abs(n.determinant()) <= kDegenerateDeterminant) throw Error("homography is singular");
  return Homography(n);
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Homography Homography::inverse() const { return from_matrix(m_.inverse()); }

std::optional<Point> Homography::apply(Point p) const {
  const double w = m_(2, 0) * p.x + m_(2, 1) * p.y + m_(2, 2);
  if (std::abs(w) < 1e-12) return std::nullopt;
  return Point{(m_(0, 0) * p.x + m_(0, 1) * p.y + m_(0, 2)) / w, (m_(1, 0) * p.x + m_(1, 1) * p.y + m_(1, 2)) / w};
}

Homography compose(const Homography& a, const Homography& b) { return Homography::from_matrix(a.matrix() * b.matrix()); }

HomographySampleConfig HomographySampleConfig::identity_only() {
  HomographySampleConfig c;
  c.scale_min = c.scale_max = 1.0;
  c.rotation_min = c.rotation_max = 0.0;
  c.translation_min = c.translation_max = 0.0;
  c.perspective_min = c.perspective_max = 0.0;
  return c;
}

void HomographySampleConfig::validate() const {
  auto range = [](const char* name, double lo, double hi) {
    if (!(lo <= hi)) throw ConfigError(name, "min must not exceed max");
  };
  range("homography.scale", scale_min, scale_max);
  range("homography.rotation", rotation_min, rotation_max);
  range("homography.translation", translation_min, translation_max);
  range("homography.perspective", perspective_min, perspective_max);
  if (scale_min <= 0) throw ConfigError("homography.scale_min", "scale must be positive");
}

Homography sample_homography(const HomographySampleConfig& config, int height, int width, Rng& rng) {
  config.validate();
  if (height <= 0 || width <= 0) throw Error("sample_homography: image extents must be positive");
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  const double half = std::max(width, height) / 2.0;

  Eigen::Matrix3d to_unit = Eigen::Matrix3d::Identity();
  to_unit(0, 0) = to_unit(1, 1) = 1.0 / half;
  to_unit(0, 2) = -cx / half;
  to_unit(1, 2) = -cy / half;
  Eigen::Matrix3d from_unit = Eigen::Matrix3d::Identity();
  from_unit(0, 0) = from_unit(1, 1) = half;
  from_unit(0, 2) = cx;
  from_unit(1, 2) = cy;

  for (int attempt = 0; attempt < 100; ++attempt) {
    const double s = uniform(rng, config.scale_min, config.scale_max);
    const double theta = uniform(rng, config.rotation_min, config.rotation_max);
    const double tx = uniform(rng, config.translation_min, config.translation_max) * width / half;
    const double ty = uniform(rng, config.translation_min, config.translation_max) * height / half;
    const double p1 = uniform(rng, config.perspective_min, config.perspective_max);
    const double p2 = uniform(rng, config.perspective_min, config.perspective_max);

    Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
    scale(0, 0) = scale(1, 1) = s;
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    rot(0, 0) = std::cos(theta);
    rot(0, 1) = -std::sin(theta);
    rot(1, 0) = std::sin(theta);
    rot(1, 1) = std::cos(theta);
    Eigen::Matrix3d trans = Eigen::Matrix3d::Identity();
    trans(0, 2) = tx;
    trans(1, 2) = ty;
    Eigen::Matrix3d persp = Eigen::Matrix3d::Identity();
    persp(2, 0) = p1;
    persp(2, 1) = p2;

    const Eigen::Matrix3d m = from_unit * scale * rot * trans * persp * to_unit;
    if (std::abs(m(2, 2)) < 1e-12) continue;
    if (std::abs((m / m(2, 2)).determinant()) <= kDegenerateDeterminant) continue;
    return Homography::from_matrix(m);
  }
  throw Error("sample_homography: 100 consecutive degenerate samples");
}

}  // namespace ssp::geom
