#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "ssp/common/rng.hpp"

namespace ssp::geom {

// Image-plane point in pixel units: x is the column, y the row, pixel
// centers at integer coordinates.
struct Point {
  double x = 0;
  double y = 0;
};

// 3x3 projective transform acting on homogeneous (x, y, 1), stored with the
// bottom-right entry scaled to 1.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}

  // Throws ssp::Error if the matrix cannot be normalized or |det| <= 1e-12.
  static Homography from_matrix(const Eigen::Matrix3d& m);
  static Homography identity() { return {}; }
  static Homography translation(double dx, double dy);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  double determinant() const { return m_.determinant(); }

  Homography inverse() const;

  // nullopt when the point maps to the plane at infinity.
  std::optional<Point> apply(Point p) const;

 private:
  explicit Homography(const Eigen::Matrix3d& normalized) : m_(normalized) {}
  Eigen::Matrix3d m_;
};

// a * b: apply b first, then a.
Homography compose(const Homography& a, const Homography& b);

inline constexpr double kDegenerateDeterminant = 1e-12;

// Ranges are [min, max]; a collapsed range yields that exact value.
struct HomographySampleConfig {
  double scale_min = 0.7;
  double scale_max = 1.3;
  double rotation_min = -25.0 * 3.14159265358979323846 / 180.0;
  double rotation_max = 25.0 * 3.14159265358979323846 / 180.0;
  double translation_min = -0.1;  // fraction of the image extent
  double translation_max = 0.1;
  double perspective_min = -0.05;  // in center-normalized coordinates
  double perspective_max = 0.05;

  // All factors collapsed to their identity values.
  static HomographySampleConfig identity_only();
  void validate() const;  // throws ConfigError
};

// Draws scale, rotation, tx, ty, p1, p2 (in that order) and composes, about
// the image center in coordinates normalized by half the larger extent:
//   H = N^-1 * S * R * T * P * N
// so the perspective jitter acts first and the centered scale last.
// Degenerate draws are resampled up to 100 times, then ssp::Error.
Homography sample_homography(const HomographySampleConfig& config, int height, int width, Rng& rng);

}  // namespace ssp::geom
