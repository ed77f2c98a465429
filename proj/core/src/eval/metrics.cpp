#include "ssp/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssp::eval {
namespace {

geom::Point to_point(const geom::Keypoint& k) { return {k.col, k.row}; }

bool inside(const geom::Point& p, ViewShape s) {
  return p.x >= 0 && p.y >= 0 && p.x <= s.width - 1 && p.y <= s.height - 1;
}

double distance(const geom::Point& a, const geom::Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double similarity(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return 1.0 - 0.5 * s;
}

// Nearest neighbour of each row of `from` among the rows of `to`.
std::vector<std::size_t> nearest(const model::DescriptorSet& from, const model::DescriptorSet& to,
                                 const std::function<double(std::size_t, std::size_t)>& tie) {
  std::vector<std::size_t> best(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best_sim = -std::numeric_limits<double>::infinity();
    double best_tie = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < to.size(); ++j) {
      const double s = similarity(from.row(i), to.row(j));
      if (s > best_sim) {
        best_sim = s;
        arg = j;
        best_tie = tie ? tie(i, j) : 0.0;
      } else if (s == best_sim && tie) {
        const double t = tie(i, j);
        if (t < best_tie) {
          best_tie = t;
          arg = j;
        }
      }
    }
    best[i] = arg;
  }
  return best;
}

model::DescriptorSet subset(const model::DescriptorSet& d, const std::vector<std::size_t>& idx) {
  model::DescriptorSet out;
  out.dim = d.dim;
  out.values.reserve(idx.size() * d.dim);
  for (auto i : idx) {
    const auto r = d.row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  return out;
}

geom::KeypointSet subset(const geom::KeypointSet& k, const std::vector<std::size_t>& idx) {
  geom::KeypointSet out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(k[i]);
  return out;
}

}  // namespace

SharedRegion shared_region(const geom::KeypointSet& a, const geom::KeypointSet& b, const geom::Homography& h,
                           ViewShape shape) {
  SharedRegion s;
  const auto inv = h.inverse();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto p = h.apply(to_point(a[i]));
    if (p && inside(*p, shape)) s.a.push_back(i);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto p = inv.apply(to_point(b[i]));
    if (p && inside(*p, shape)) s.b.push_back(i);
  }
  return s;
}

std::optional<RepeatabilityResult> repeatability(const geom::KeypointSet& a, const geom::KeypointSet& b,
                                                 const geom::Homography& h, ViewShape shape, double epsilon) {
  const auto region = shared_region(a, b, h, shape);
  RepeatabilityResult res;
  res.counted = region.a.size() + region.b.size();
  if (res.counted == 0) return std::nullopt;

  const auto inv = h.inverse();
  double error_sum = 0;
  // One direction: warp `from` points with `m` and look for the nearest of `to`.
  auto sweep = [&](const geom::KeypointSet& from, const std::vector<std::size_t>& from_idx,
                   const geom::KeypointSet& to, const std::vector<std::size_t>& to_idx, const geom::Homography& m) {
    for (auto i : from_idx) {
      const auto w = *m.apply(to_point(from[i]));
      double best = std::numeric_limits<double>::infinity();
      for (auto j : to_idx) best = std::min(best, distance(w, to_point(to[j])));
      if (best <= epsilon) {
        ++res.repeated;
        error_sum += best;
      }
    }
  };
  sweep(a, region.a, b, region.b, h);
  sweep(b, region.b, a, region.a, inv);
  res.repeatability = static_cast<double>(res.repeated) / static_cast<double>(res.counted);
  if (res.repeated > 0) res.mle = error_sum / static_cast<double>(res.repeated);
  return res;
}

std::vector<Match> nn_matches(const model::DescriptorSet& a, const model::DescriptorSet& b, const TieBreak& tie_break) {
  std::vector<Match> out;
  if (a.size() == 0 || b.size() == 0) return out;
  if (a.dim != b.dim) throw ShapeError("nn_matches: descriptor dimensions differ");
  const auto ab = nearest(a, b, tie_break);
  TieBreak reverse;
  if (tie_break) reverse = [&](std::size_t j, std::size_t i) { return tie_break(i, j); };
  const auto ba = nearest(b, a, reverse);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ba[ab[i]] == i) out.push_back({i, ab[i], similarity(a.row(i), b.row(ab[i]))});
  }
  std::stable_sort(out.begin(), out.end(), [](const Match& x, const Match& y) { return x.similarity > y.similarity; });
  return out;
}

double average_precision(const std::vector<bool>& ranked) {
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!ranked[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return hits ? sum / static_cast<double>(hits) : 0.0;
}

MatchingResult matching_metrics(const geom::KeypointSet& kps_a, const model::DescriptorSet& desc_a,
                                const geom::KeypointSet& kps_b, const model::DescriptorSet& desc_b,
                                const geom::Homography& h, ViewShape shape, double epsilon) {
  if (desc_a.size() != kps_a.size() || desc_b.size() != kps_b.size()) {
    throw ShapeError("matching_metrics: one descriptor per keypoint required");
  }
  const auto region = shared_region(kps_a, kps_b, h, shape);
  const auto ka = subset(kps_a, region.a);
  const auto kb = subset(kps_b, region.b);
  const auto da = subset(desc_a, region.a);
  const auto db = subset(desc_b, region.b);

  // Symmetric transfer distance: the larger of the errors measured in either
  // view, so swapping the views (with the inverse H) changes nothing.
  const auto inv = h.inverse();
  std::vector<geom::Point> warped(ka.size()), unwarped(kb.size());
  for (std::size_t i = 0; i < ka.size(); ++i) warped[i] = *h.apply(to_point(ka[i]));
  for (std::size_t j = 0; j < kb.size(); ++j) unwarped[j] = *inv.apply(to_point(kb[j]));
  const auto geo = [&](std::size_t i, std::size_t j) {
    return std::max(distance(warped[i], to_point(kb[j])), distance(unwarped[j], to_point(ka[i])));
  };

  MatchingResult res;
  auto matches = nn_matches(da, db, geo);
  // Equal similarities are ranked by keypoint position rather than index so
  // the AP does not depend on the order keypoints were listed in.
  const auto pos = [](const geom::Keypoint& k) { return std::pair{k.row, k.col}; };
  std::stable_sort(matches.begin(), matches.end(), [&](const Match& x, const Match& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    if (pos(ka[x.a]) != pos(ka[y.a])) return pos(ka[x.a]) < pos(ka[y.a]);
    return pos(kb[x.b]) < pos(kb[y.b]);
  });
  res.matches = matches.size();
  std::vector<bool> ranked;
  ranked.reserve(matches.size());
  for (const auto& m : matches) {
    const bool ok = geo(m.a, m.b) <= epsilon;
    ranked.push_back(ok);
    res.correct += ok ? 1 : 0;
  }
  if (!matches.empty()) res.nn_map = average_precision(ranked);
  if (!ka.empty() && !kb.empty()) {
    const double c = static_cast<double>(res.correct);
    res.matching_score = (c / static_cast<double>(ka.size()) + c / static_cast<double>(kb.size())) / 2.0;
  }
  return res;
}

double mean_corner_error(const geom::Homography& h_true, const geom::Homography& h_est, ViewShape s) {
  const geom::Point corners[4] = {
      {0, 0}, {static_cast<double>(s.width - 1), 0}, {0, static_cast<double>(s.height - 1)},
      {static_cast<double>(s.width - 1), static_cast<double>(s.height - 1)}};
  double total = 0;
  for (const auto& c : corners) {
    const auto t = h_true.apply(c);
    const auto e = h_est.apply(c);
    if (!t || !e) return std::numeric_limits<double>::infinity();
    total += distance(*t, *e);
  }
  return total / 4.0;
}

HomographyResult homography_estimation(const geom::KeypointSet& kps_a, const model::DescriptorSet& desc_a,
                                       const geom::KeypointSet& kps_b, const model::DescriptorSet& desc_b,
                                       const geom::Homography& h_true, ViewShape shape,
                                       const std::array<double, 3>& thresholds, const geom::RansacConfig& ransac) {
  HomographyResult res;
  const auto matches = nn_matches(desc_a, desc_b);
  if (matches.size() < 4) {
    res.estimation_failed = true;
    return res;
  }
  std::vector<geom::PointPair> pairs;
  pairs.reserve(matches.size());
  for (const auto& m : matches) pairs.push_back({to_point(kps_a[m.a]), to_point(kps_b[m.b])});
  const auto fit = geom::estimate_homography(pairs, ransac);
  if (!fit) {
    res.estimation_failed = true;
    return res;
  }
  const double err = mean_corner_error(h_true, fit->h, shape);
  res.corner_error = err;
  for (std::size_t i = 0; i < thresholds.size(); ++i) res.correct[i] = err <= thresholds[i];
  return res;
}

}  // namespace ssp::eval
