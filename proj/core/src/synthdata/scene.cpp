#include "ssp/synthdata/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <array>

#include "ssp/common/rng.hpp"

namespace ssp::synth {
namespace {

constexpr int kMaxPlacementAttempts = 50;

// Coordinates go through f32 in the dataset file; rounding here keeps the
// in-memory labels identical to what a reader gets back.
double f32_round(double v) { return static_cast<double>(static_cast<float>(v)); }

geom::Point f32_round(geom::Point p) { return {f32_round(p.x), f32_round(p.y)}; }

bool point_in_polygon(const std::vector<geom::Point>& poly, double x, double y) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y > y) != (b.y > y)) {
      const double xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xc) inside = !inside;
    }
  }
  return inside;
}

double segment_distance(const geom::Point& a, const geom::Point& b, double x, double y) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double px = a.x + t * dx - x;
  const double py = a.y + t * dy - y;
  return std::sqrt(px * px + py * py);
}

bool covers(const Primitive& p, double x, double y) {
  switch (p.kind) {
    case ShapeClass::Line:
      return segment_distance(p.vertices[0], p.vertices[1], x, y) <= 0.5 * p.thickness;
    case ShapeClass::Quadrilateral:
    case ShapeClass::Triangle:
      return point_in_polygon(p.vertices, x, y);
    case ShapeClass::Ellipse: {
      const double dx = x - p.center.x;
      const double dy = y - p.center.y;
      const double c = std::cos(p.angle);
      const double s = std::sin(p.angle);
      const double u = (dx * c + dy * s) / p.radius_x;
      const double v = (-dx * s + dy * c) / p.radius_y;
      return u * u + v * v <= 1.0;
    }
    case ShapeClass::Background:
      break;
  }
  return false;
}

// Pixel-space bounding box [r0, r1] x [c0, c1], clipped to the image.
struct Box {
  int r0, r1, c0, c1;
};

Box bounds(const Primitive& p, int height, int width) {
  double x0, x1, y0, y1;
  if (p.kind == ShapeClass::Ellipse) {
    const double r = std::max(p.radius_x, p.radius_y);
    x0 = p.center.x - r;
    x1 = p.center.x + r;
    y0 = p.center.y - r;
    y1 = p.center.y + r;
  } else {
    x0 = x1 = p.vertices[0].x;
    y0 = y1 = p.vertices[0].y;
    for (const auto& v : p.vertices) {
      x0 = std::min(x0, v.x);
      x1 = std::max(x1, v.x);
      y0 = std::min(y0, v.y);
      y1 = std::max(y1, v.y);
    }
    const double pad = p.kind == ShapeClass::Line ? 0.5 * p.thickness : 0.0;
    x0 -= pad;
    x1 += pad;
    y0 -= pad;
    y1 += pad;
  }
  Box b;
  b.c0 = std::max(0, static_cast<int>(std::floor(x0)) - 1);
  b.c1 = std::min(width - 1, static_cast<int>(std::ceil(x1)) + 1);
  b.r0 = std::max(0, static_cast<int>(std::floor(y0)) - 1);
  b.r1 = std::min(height - 1, static_cast<int>(std::ceil(y1)) + 1);
  return b;
}

std::vector<geom::Point> feature_points(const Primitive& p) {
  if (p.kind == ShapeClass::Ellipse) return {p.center};
  return p.vertices;
}

double cross(const geom::Point& o, const geom::Point& a, const geom::Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool convex(const std::vector<geom::Point>& poly) {
  int sign = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
    const int s = c > 0 ? 1 : (c < 0 ? -1 : 0);
    if (s == 0) return false;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

// Smallest interior angle of a polygon, radians.
double min_angle(const std::vector<geom::Point>& poly) {
  double best = std::numbers::pi;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prev = poly[(i + n - 1) % n];
    const auto& cur = poly[i];
    const auto& next = poly[(i + 1) % n];
    const double ax = prev.x - cur.x, ay = prev.y - cur.y;
    const double bx = next.x - cur.x, by = next.y - cur.y;
    const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
    if (na == 0 || nb == 0) return 0;
    best = std::min(best, std::acos(std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0)));
  }
  return best;
}

bool inside_image(const geom::Point& p, int height, int width, double margin) {
  return p.x >= margin && p.y >= margin && p.x <= width - 1 - margin && p.y <= height - 1 - margin;
}

bool well_separated(const std::vector<geom::Point>& pts, double sep) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) < sep) return false;
    }
  }
  return true;
}

class Placer {
 public:
  Placer(const SceneConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  std::optional<Primitive> draw(ShapeClass kind) {
    switch (kind) {
      case ShapeClass::Line:
        return line();
      case ShapeClass::Quadrilateral:
        return quad();
      case ShapeClass::Triangle:
        return triangle();
      case ShapeClass::Ellipse:
        return ellipse();
      default:
        return std::nullopt;
    }
  }

 private:
  double size_scale() const { return std::min(cfg_.height, cfg_.width) / 120.0; }

  geom::Point random_point(double margin) {
    return {uniform(rng_, margin, cfg_.width - 1 - margin), uniform(rng_, margin, cfg_.height - 1 - margin)};
  }

  std::optional<Primitive> line() {
    Primitive p;
    p.kind = ShapeClass::Line;
    const auto a = f32_round(random_point(2.0));
    const auto b = f32_round(random_point(2.0));
    if (std::hypot(a.x - b.x, a.y - b.y) < 15.0 * size_scale()) return std::nullopt;
    p.vertices = {a, b};
    p.thickness = uniform(rng_, 1.5, 3.0);
    return p;
  }

  std::optional<Primitive> triangle() {
    Primitive p;
    p.kind = ShapeClass::Triangle;
    const double s = size_scale();
    const geom::Point c = random_point(4.0);
    const double r = uniform(rng_, 10.0 * s, 35.0 * s);
    const double phase = uniform(rng_, 0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < 3; ++k) {
      const double a = phase + k * 2.0 * std::numbers::pi / 3.0 + uniform(rng_, -0.5, 0.5);
      const double rr = r * uniform(rng_, 0.6, 1.2);
      p.vertices.push_back(f32_round(geom::Point{c.x + rr * std::cos(a), c.y + rr * std::sin(a)}));
    }
    if (min_angle(p.vertices) < 20.0 * std::numbers::pi / 180.0) return std::nullopt;
    return p;
  }

  std::optional<Primitive> quad() {
    Primitive p;
    p.kind = ShapeClass::Quadrilateral;
    const double s = size_scale();
    const geom::Point c = random_point(4.0);
    const double r = uniform(rng_, 10.0 * s, 35.0 * s);
    const double phase = uniform(rng_, 0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < 4; ++k) {
      const double a = phase + k * std::numbers::pi / 2.0 + uniform(rng_, -0.4, 0.4);
      const double rr = r * uniform(rng_, 0.7, 1.2);
      p.vertices.push_back(f32_round(geom::Point{c.x + rr * std::cos(a), c.y + rr * std::sin(a)}));
    }
    if (!convex(p.vertices) || min_angle(p.vertices) < 30.0 * std::numbers::pi / 180.0) return std::nullopt;
    return p;
  }

  std::optional<Primitive> ellipse() {
    Primitive p;
    p.kind = ShapeClass::Ellipse;
    const double s = size_scale();
    p.center = f32_round(random_point(4.0));
    p.radius_x = uniform(rng_, 5.0 * s, 22.0 * s);
    p.radius_y = uniform(rng_, 5.0 * s, 22.0 * s);
    p.angle = uniform(rng_, 0.0, std::numbers::pi);
    return p;
  }

  const SceneConfig& cfg_;
  Rng& rng_;
};

struct LabeledPoint {
  geom::Point at;
  ShapeClass kind;
  bool alive = true;
};

float pick_intensity(const SceneConfig& cfg, float background, Rng& rng) {
  float v = cfg.foreground_min;
  for (int attempt = 0; attempt < 20; ++attempt) {
    v = static_cast<float>(uniform(rng, cfg.foreground_min, cfg.foreground_max));
    if (std::abs(v - background) >= cfg.min_contrast) return v;
  }
  // Fall back to whichever end of the range is farther from the background.
  return std::abs(cfg.foreground_min - background) > std::abs(cfg.foreground_max - background) ? cfg.foreground_min
                                                                                                 : cfg.foreground_max;
}

}  // namespace

const char* class_name(ShapeClass c) {
  switch (c) {
    case ShapeClass::Background:
      return "background";
    case ShapeClass::Line:
      return "line";
    case ShapeClass::Quadrilateral:
      return "quadrilateral";
    case ShapeClass::Triangle:
      return "triangle";
    case ShapeClass::Ellipse:
      return "ellipse";
  }
  return "unknown";
}

void SceneConfig::validate() const {
  if (height <= 0 || width <= 0) throw ConfigError("scene.height", "image extents must be positive");
  if (height > 65535 || width > 65535) throw ConfigError("scene.width", "image extents must fit in 16 bits");
  if (min_primitives < 0) throw ConfigError("scene.min_primitives", "must be >= 0");
  if (max_primitives < min_primitives) throw ConfigError("scene.max_primitives", "must be >= min_primitives");
  auto unit = [](float lo, float hi) { return lo >= 0.0f && hi <= 1.0f && lo <= hi; };
  if (!unit(background_min, background_max)) throw ConfigError("scene.background", "range must lie in [0, 1]");
  if (!unit(foreground_min, foreground_max)) throw ConfigError("scene.foreground", "range must lie in [0, 1]");
  if (min_contrast < 0) throw ConfigError("scene.min_contrast", "must be >= 0");
  if (noise_sigma < 0) throw ConfigError("scene.noise_sigma", "must be >= 0");
  if (min_keypoint_separation < 0) throw ConfigError("scene.min_keypoint_separation", "must be >= 0");
  if (max_primitives > 0 && fixed_primitives.empty() &&
      std::none_of(enabled.begin(), enabled.end(), [](bool b) { return b; })) {
    throw ConfigError("scene.enabled", "at least one primitive class must be enabled");
  }
  for (const auto& p : fixed_primitives) {
    const bool polygon = p.kind == ShapeClass::Quadrilateral || p.kind == ShapeClass::Triangle;
    const std::size_t want = p.kind == ShapeClass::Line ? 2 : p.kind == ShapeClass::Quadrilateral ? 4 : 3;
    if (p.kind == ShapeClass::Background) throw ConfigError("scene.fixed_primitives", "background is not a shape");
    if ((polygon || p.kind == ShapeClass::Line) && p.vertices.size() != want) {
      throw ConfigError("scene.fixed_primitives", std::string(class_name(p.kind)) + " needs " +
                                                      std::to_string(want) + " vertices");
    }
    if (p.kind == ShapeClass::Ellipse && (p.radius_x <= 0 || p.radius_y <= 0)) {
      throw ConfigError("scene.fixed_primitives", "ellipse radii must be positive");
    }
  }
}

ImageSample render_scene(const SceneConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int H = config.height;
  const int W = config.width;

  ImageSample out;
  out.seed = seed;
  out.image = Image(H, W);
  out.mask = ClassMask(H, W, 0);

  // Background: a base level plus a gentle linear gradient.
  const float base = static_cast<float>(uniform(rng, config.background_min, config.background_max));
  const double gx = uniform(rng, -0.1, 0.1);
  const double gy = uniform(rng, -0.1, 0.1);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const double v = base + gx * (c / double(W) - 0.5) + gy * (r / double(H) - 0.5);
      out.image.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }

  std::vector<Primitive> scene;
  std::vector<LabeledPoint> points;

  auto accepts = [&](const Primitive& p) {
    const auto pts = feature_points(p);
    for (const auto& q : pts) {
      if (!inside_image(q, H, W, 0.0)) return false;
    }
    if (!well_separated(pts, config.min_keypoint_separation)) return false;
    for (const auto& lp : points) {
      if (!lp.alive) continue;
      for (const auto& q : pts) {
        if (std::hypot(q.x - lp.at.x, q.y - lp.at.y) < config.min_keypoint_separation) return false;
      }
    }
    return true;
  };

  if (!config.fixed_primitives.empty()) {
    scene = config.fixed_primitives;
  } else {
    std::vector<ShapeClass> pool;
    for (int k = 0; k < 4; ++k) {
      if (config.enabled[k]) pool.push_back(static_cast<ShapeClass>(k + 1));
    }
    const int count = static_cast<int>(
        std::uniform_int_distribution<int>(config.min_primitives, config.max_primitives)(rng));
    Placer placer(config, rng);
    for (int i = 0; i < count && !pool.empty(); ++i) {
      const ShapeClass kind = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      // Unplaceable primitives are skipped; the scene just gets sparser.
      for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        auto p = placer.draw(kind);
        if (p && accepts(*p)) {
          for (const auto& q : feature_points(*p)) points.push_back({q, p->kind});
          scene.push_back(std::move(*p));
          break;
        }
      }
    }
  }

  if (!config.fixed_primitives.empty()) {
    for (const auto& p : scene) {
      for (const auto& q : feature_points(p)) points.push_back({q, p.kind});
    }
  }

  // Rasterize in order with 2x2 supersampling; track which labeled points
  // each primitive owns so occlusion only looks at earlier ones.
  std::size_t owned_end = 0;
  std::vector<float> coverage;
  for (auto& p : scene) {
    if (config.fixed_primitives.empty() || p.intensity < 0.0f || p.intensity > 1.0f) {
      p.intensity = pick_intensity(config, base, rng);
    }
    const std::size_t owned_begin = owned_end;
    owned_end += feature_points(p).size();

    const Box b = bounds(p, H, W);
    const int bw = b.c1 - b.c0 + 1;
    const int bh = b.r1 - b.r0 + 1;
    if (bw <= 0 || bh <= 0) continue;
    coverage.assign(static_cast<std::size_t>(bw) * bh, 0.0f);
    for (int r = b.r0; r <= b.r1; ++r) {
      for (int c = b.c0; c <= b.c1; ++c) {
        int hits = 0;
        for (double oy : {-0.25, 0.25}) {
          for (double ox : {-0.25, 0.25}) hits += covers(p, c + ox, r + oy) ? 1 : 0;
        }
        if (hits == 0) continue;
        const float cov = hits / 4.0f;
        coverage[static_cast<std::size_t>(r - b.r0) * bw + (c - b.c0)] = cov;
        float& px = out.image.at(r, c);
        px = px * (1.0f - cov) + p.intensity * cov;
        if (hits >= 2) out.mask.at(r, c) = static_cast<std::uint8_t>(p.kind);
      }
    }

    for (std::size_t i = 0; i < owned_begin; ++i) {
      auto& lp = points[i];
      if (!lp.alive) continue;
      const int r = static_cast<int>(std::lround(lp.at.y));
      const int c = static_cast<int>(std::lround(lp.at.x));
      if (r < b.r0 || r > b.r1 || c < b.c0 || c > b.c1) continue;
      if (coverage[static_cast<std::size_t>(r - b.r0) * bw + (c - b.c0)] > 0.0f) lp.alive = false;
    }
    for (std::size_t i = owned_begin; i < owned_end; ++i) {
      const auto& lp = points[i];
      const int r = static_cast<int>(std::lround(lp.at.y));
      const int c = static_cast<int>(std::lround(lp.at.x));
      if (out.mask.contains(r, c)) out.mask.at(r, c) = static_cast<std::uint8_t>(lp.kind);
    }
  }

  if (config.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma);
    for (auto& v : out.image.values) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
  }

  for (const auto& lp : points) {
    if (!lp.alive || !inside_image(lp.at, H, W, 0.0)) continue;
    out.keypoints.push_back({f32_round(lp.at.y), f32_round(lp.at.x), 1.0});
  }
  out.scene = std::move(scene);
  return out;
}

ClassMask downsample_majority(const ClassMask& mask, int cell) {
  if (cell <= 0 || mask.height % cell != 0 || mask.width % cell != 0) {
    throw ShapeError("mask " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                     " is not divisible into " + std::to_string(cell) + "-pixel cells");
  }
  ClassMask out(mask.height / cell, mask.width / cell, 0);
  std::array<int, 256> counts{};
  for (int cr = 0; cr < out.height; ++cr) {
    for (int cc = 0; cc < out.width; ++cc) {
      counts.fill(0);
      for (int r = 0; r < cell; ++r) {
        for (int c = 0; c < cell; ++c) ++counts[mask.at(cr * cell + r, cc * cell + c)];
      }
      // max_element returns the first maximum, i.e. the lowest class on ties.
      out.at(cr, cc) = static_cast<std::uint8_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
  }
  return out;
}

}  // namespace ssp::synth
