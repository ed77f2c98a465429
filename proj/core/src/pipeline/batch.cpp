#include "ssp/pipeline/batch.hpp"

#include <algorithm>

#include "ssp/common/parallel.hpp"
#include "ssp/geometry/warp.hpp"
#include "ssp/losses/task_losses.hpp"
#include "ssp/synthdata/augment.hpp"

namespace ssp::pipeline {
namespace {

std::size_t pick(std::span<const synth::ImageSample> dataset, const TrainConfig& cfg, std::int64_t it, int j) {
  return static_cast<std::size_t>(item_seed(cfg.seed, Stream::Batch, it, cfg.batch_size, j) % dataset.size());
}

void check_shape(const synth::ImageSample& s, const synth::ImageSample& first) {
  if (s.image.height != first.image.height || s.image.width != first.image.width) {
    throw ShapeError("dataset images differ in size");
  }
}

geom::KeypointSet warp_labels(const geom::KeypointSet& kps, const geom::Homography& h, int height, int width) {
  return geom::filter_inside(geom::warp_points(kps, h).points, height, width);
}

void copy_image(const Image& img, std::vector<float>& dst, std::size_t slot) {
  std::copy(img.values.begin(), img.values.end(), dst.begin() + static_cast<std::ptrdiff_t>(slot * img.size()));
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

std::uint64_t item_seed(std::uint64_t seed, Stream stream, std::int64_t iteration, int batch_size, int item) {
  const auto index = static_cast<std::uint64_t>(iteration) * static_cast<std::uint64_t>(batch_size) +
                     static_cast<std::uint64_t>(item);
  return derive_seed(stream_seed(seed, stream), index);
}

PretrainBatch make_pretrain_batch(std::span<const synth::ImageSample> dataset, const TrainConfig& cfg,
                                  std::int64_t iteration) {
  const int b = cfg.batch_size;
  if (dataset.empty()) throw Error("training needs a non-empty dataset");
  const auto& first = dataset[0];
  const int h = first.image.height, w = first.image.width;
  const std::size_t cells = static_cast<std::size_t>(h / model::kCell) * (w / model::kCell);
  PretrainBatch out;
  std::vector<float> pixels(static_cast<std::size_t>(b) * h * w);
  out.targets.resize(static_cast<std::size_t>(b) * cells);
  out.keypoints.resize(b);
  parallel_for(static_cast<std::size_t>(b), cfg.workers, [&](std::size_t j) {
    const int item = static_cast<int>(j);
    const auto& sample = dataset[pick(dataset, cfg, iteration, item)];
    check_shape(sample, first);
    Image img = sample.image;
    geom::KeypointSet kps = sample.keypoints;
    if (cfg.homographic_augmentation) {
      Rng hr(item_seed(cfg.seed, Stream::Homography, iteration, b, item));
      const auto hom = geom::sample_homography(cfg.homography, h, w, hr);
      img = geom::warp_image(img, hom, h, w);
      kps = warp_labels(kps, hom, h, w);
    }
    Rng pr(item_seed(cfg.seed, Stream::Photometric, iteration, b, item));
    img = synth::photometric_augment(img, pr, cfg.photometric);
    copy_image(img, pixels, j);
    const auto t = loss::detector_targets(kps, h, w);
    std::copy(t.begin(), t.end(), out.targets.begin() + static_cast<std::ptrdiff_t>(j * cells));
    out.keypoints[j] = std::move(kps);
  });
  out.images = ad::Tensor<float>::from({b, 1, h, w}, std::move(pixels));
  return out;
}

JointBatch make_joint_batch(std::span<const synth::ImageSample> dataset, const TrainConfig& cfg,
                            std::int64_t iteration) {
  const int b = cfg.batch_size;
  if (dataset.empty()) throw Error("training needs a non-empty dataset");
  const auto& first = dataset[0];
  const int h = first.image.height, w = first.image.width;
  const int gh = h / model::kCell, gw = w / model::kCell;
  const std::size_t cells = static_cast<std::size_t>(gh) * gw;
  JointBatch out;
  out.batch_size = b;
  std::vector<float> pixels(static_cast<std::size_t>(2 * b) * h * w);
  out.targets1.resize(b * cells);
  out.targets2.resize(b * cells);
  out.labels1.resize(b * cells);
  out.labels2.resize(b * cells);
  out.correspondences.resize(b);
  out.homographies.resize(b);
  parallel_for(static_cast<std::size_t>(b), cfg.workers, [&](std::size_t j) {
    const int item = static_cast<int>(j);
    const auto& sample = dataset[pick(dataset, cfg, iteration, item)];
    check_shape(sample, first);
    if (sample.mask.height != h || sample.mask.width != w) throw ShapeError("dataset mask differs from its image");

    Rng hr(item_seed(cfg.seed, Stream::Homography, iteration, b, item));
    const auto hom = geom::sample_homography(cfg.homography, h, w, hr);
    Rng pr(item_seed(cfg.seed, Stream::Photometric, iteration, b, item));
    const Image view1 = synth::photometric_augment(sample.image, pr, cfg.photometric);
    const Image view2 = synth::photometric_augment(geom::warp_image(sample.image, hom, h, w), pr, cfg.photometric);
    copy_image(view1, pixels, j);
    copy_image(view2, pixels, j + static_cast<std::size_t>(b));

    const auto offset = static_cast<std::ptrdiff_t>(j * cells);
    const auto t1 = loss::detector_targets(sample.keypoints, h, w);
    const auto t2 = loss::detector_targets(warp_labels(sample.keypoints, hom, h, w), h, w);
    std::copy(t1.begin(), t1.end(), out.targets1.begin() + offset);
    std::copy(t2.begin(), t2.end(), out.targets2.begin() + offset);

    const auto m1 = synth::downsample_majority(sample.mask, model::kCell);
    const auto m2 = synth::downsample_majority(geom::warp_mask(sample.mask, hom, h, w), model::kCell);
    std::copy(m1.values.begin(), m1.values.end(), out.labels1.begin() + offset);
    std::copy(m2.values.begin(), m2.values.end(), out.labels2.begin() + offset);

    Rng nr(item_seed(cfg.seed, Stream::Negatives, iteration, b, item));
    out.correspondences[j] = loss::build_correspondences(hom, gh, gw, cfg.correspondence, nr);
    out.homographies[j] = hom;
  });
  out.images = ad::Tensor<float>::from({2 * b, 1, h, w}, std::move(pixels));
  return out;
}

}  // namespace ssp::pipeline
