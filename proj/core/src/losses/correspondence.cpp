#include "ssp/losses/correspondence.hpp"

#include <cmath>

#include "ssp/autodiff/ops.hpp"

namespace ssp::loss {
namespace {

constexpr double kCell = 8.0;
constexpr double kCenter = 3.5;

geom::Point cell_center(int r, int c) { return {kCell * c + kCenter, kCell * r + kCenter}; }

}  // namespace

void CorrespondenceConfig::validate() const {
  if (!(positive_radius > 0)) throw ConfigError("descriptor.positive_radius", "must be > 0");
}

void HingeConfig::validate() const {
  if (!(m_p > m_n)) throw ConfigError("descriptor.m_p", "positive margin must exceed the negative margin");
}

CorrespondenceSet CorrespondenceSet::transposed() const {
  CorrespondenceSet t;
  t.grid_height = grid_height;
  t.grid_width = grid_width;
  for (auto [a, b] : positives) t.positives.emplace_back(b, a);
  for (auto [a, b] : negatives) t.negatives.emplace_back(b, a);
  return t;
}

CorrespondenceSet build_correspondences(const geom::Homography& h, int grid_height, int grid_width,
                                        const CorrespondenceConfig& config, Rng& rng) {
  config.validate();
  if (grid_height <= 0 || grid_width <= 0) throw ShapeError("correspondence grid must be non-empty");
  CorrespondenceSet set;
  set.grid_height = grid_height;
  set.grid_width = grid_width;
  const int cells = grid_height * grid_width;

  std::vector<std::optional<geom::Point>> warped(cells);
  for (int r = 0; r < grid_height; ++r) {
    for (int c = 0; c < grid_width; ++c) {
      const int a = r * grid_width + c;
      warped[a] = h.apply(cell_center(r, c));
      if (!warped[a]) continue;
      const auto& q = *warped[a];
      const double br = std::round((q.y - kCenter) / kCell);
      const double bc = std::round((q.x - kCenter) / kCell);
      if (br < 0 || bc < 0 || br >= grid_height || bc >= grid_width) continue;
      const auto center = cell_center(static_cast<int>(br), static_cast<int>(bc));
      if (std::hypot(q.x - center.x, q.y - center.y) <= config.positive_radius) {
        set.positives.emplace_back(a, static_cast<std::int32_t>(br) * grid_width + static_cast<std::int32_t>(bc));
      }
    }
  }

  std::size_t wanted = config.negative_count;
  if (!set.positives.empty()) wanted = std::min(wanted, config.negative_ratio * set.positives.size());
  auto is_negative = [&](int a, int b) {
    if (!warped[a]) return true;
    const auto center = cell_center(b / grid_width, b % grid_width);
    return std::hypot(warped[a]->x - center.x, warped[a]->y - center.y) > config.positive_radius;
  };
  std::uniform_int_distribution<int> pick(0, cells - 1);
  // Rejection sampling; bounded so grids with almost no negative pairs
  // cannot stall.
  const std::size_t max_draws = 50 * wanted + 1000;
  for (std::size_t draws = 0; set.negatives.size() < wanted && draws < max_draws; ++draws) {
    const int a = pick(rng);
    const int b = pick(rng);
    if (is_negative(a, b)) set.negatives.emplace_back(a, b);
  }
  return set;
}

template <class T>
DescriptorLoss<T> descriptor_loss(const ad::Tensor<T>& coarse1, const ad::Tensor<T>& coarse2,
                                  std::span<const CorrespondenceSet> correspondences, const HingeConfig& config) {
  config.validate();
  if (coarse1.rank() != 4 || coarse1.shape() != coarse2.shape()) {
    throw ShapeError("descriptor_loss: coarse maps must share one [N, D, Hc, Wc] shape, got " +
                     ad::to_string(coarse1.shape()) + " and " + ad::to_string(coarse2.shape()));
  }
  const std::int64_t n = coarse1.dim(0), d = coarse1.dim(1), hc = coarse1.dim(2), wc = coarse1.dim(3);
  if (static_cast<std::int64_t>(correspondences.size()) != n) {
    throw ShapeError("descriptor_loss: expected one correspondence set per batch item (" + std::to_string(n) + ")");
  }
  std::vector<std::int64_t> pa, pb, na, nb;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& cs = correspondences[i];
    if (cs.grid_height != hc || cs.grid_width != wc) {
      throw ShapeError("descriptor_loss: correspondence grid does not match the descriptor grid");
    }
    const std::int64_t off = i * hc * wc;
    for (auto [a, b] : cs.positives) {
      pa.push_back(off + a);
      pb.push_back(off + b);
    }
    for (auto [a, b] : cs.negatives) {
      na.push_back(off + a);
      nb.push_back(off + b);
    }
  }
  if (pa.empty() && na.empty()) throw Error("descriptor_loss: no positive or negative pairs in the batch");

  const auto flat1 = ad::reshape(ad::to_channels_last(ad::l2_normalize(coarse1, 1)), {n * hc * wc, d});
  const auto flat2 = ad::reshape(ad::to_channels_last(ad::l2_normalize(coarse2, 1)), {n * hc * wc, d});

  DescriptorLoss<T> out;
  if (!pa.empty()) {
    const double np = static_cast<double>(pa.size());
    const auto sim = ad::dot(ad::gather_rows(flat1, std::move(pa)), ad::gather_rows(flat2, std::move(pb)));
    out.positive = ad::scale(ad::sum(ad::hinge(ad::add_scalar(ad::scale(sim, -1.0), config.m_p))), 1.0 / np);
  }
  if (!na.empty()) {
    const double nn = static_cast<double>(na.size());
    const auto sim = ad::dot(ad::gather_rows(flat1, std::move(na)), ad::gather_rows(flat2, std::move(nb)));
    out.negative = ad::scale(ad::sum(ad::hinge(ad::add_scalar(sim, -config.m_n))), 1.0 / nn);
  }
  if (out.positive.defined() && out.negative.defined()) {
    out.total = ad::add(out.positive, out.negative);
  } else {
    out.total = out.positive.defined() ? out.positive : out.negative;
  }
  return out;
}

template DescriptorLoss<float> descriptor_loss<float>(const ad::Tensor<float>&, const ad::Tensor<float>&,
                                                      std::span<const CorrespondenceSet>, const HingeConfig&);
template DescriptorLoss<double> descriptor_loss<double>(const ad::Tensor<double>&, const ad::Tensor<double>&,
                                                        std::span<const CorrespondenceSet>, const HingeConfig&);

}  // namespace ssp::loss
