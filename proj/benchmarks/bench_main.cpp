#include <benchmark/benchmark.h>

#include "ssp/autodiff/ops.hpp"
#include "ssp/common/rng.hpp"
#include "ssp/geometry/estimate.hpp"
#include "ssp/geometry/nms.hpp"
#include "ssp/pipeline/train.hpp"
#include "ssp/synthdata/scene.hpp"

namespace {

using namespace ssp;
using TF = ad::Tensor<float>;

TF random_tensor(ad::Shape shape, std::uint64_t seed, bool grad = false) {
  Rng rng(seed);
  std::vector<float> v(static_cast<std::size_t>(ad::numel(shape)));
  for (auto& x : v) x = static_cast<float>(uniform(rng, -1, 1));
  return TF::from(std::move(shape), std::move(v), grad);
}

// 3x3 convolution at the first-block resolution of a desk-scale encoder.
void BM_Conv3x3ForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  auto x = random_tensor({4, c, 60, 80}, 1, true);
  auto w = random_tensor({c, c, 3, 3}, 2, true);
  auto b = random_tensor({c}, 3, true);
  for (auto _ : state) {
    auto y = ad::sum(ad::conv2d(x, w, b, 1));
    ad::backward(y);
    benchmark::DoNotOptimize(w.grad().data());
    x.zero_grad();
    w.zero_grad();
    b.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_Conv3x3ForwardBackward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BatchNormForwardBackward(benchmark::State& state) {
  auto x = random_tensor({16, 32, 30, 40}, 4, true);
  auto gamma = TF::full({32}, 1.f, true);
  auto beta = TF::zeros({32}, true);
  auto mean = TF::zeros({32});
  auto var = TF::full({32}, 1.f);
  ad::BatchNormOptions opts;
  for (auto _ : state) {
    auto y = ad::sum(ad::batch_norm(x, gamma, beta, mean, var, opts));
    ad::backward(y);
    benchmark::DoNotOptimize(gamma.grad().data());
    x.zero_grad();
    gamma.zero_grad();
    beta.zero_grad();
  }
}
BENCHMARK(BM_BatchNormForwardBackward)->Unit(benchmark::kMillisecond);

void BM_Nms(benchmark::State& state) {
  Image heat(240, 320);
  Rng rng(5);
  for (auto& v : heat.values) v = static_cast<float>(uniform(rng, 0, 0.05));
  for (auto _ : state) benchmark::DoNotOptimize(geom::nms(heat, 4, 0.015f, 1000));
}
BENCHMARK(BM_Nms)->Unit(benchmark::kMicrosecond);

void BM_RansacHomography(benchmark::State& state) {
  Rng rng(6);
  const auto h = geom::sample_homography({}, 240, 320, rng);
  std::vector<geom::PointPair> pairs;
  while (pairs.size() < 300) {
    const geom::Point p{uniform(rng, 0, 319), uniform(rng, 0, 239)};
    auto q = h.apply(p);
    if (!q) continue;
    // A third of the matches are outliers.
    if (pairs.size() % 3 == 0) q = geom::Point{uniform(rng, 0, 319), uniform(rng, 0, 239)};
    pairs.push_back({p, *q});
  }
  for (auto _ : state) benchmark::DoNotOptimize(geom::estimate_homography(pairs));
}
BENCHMARK(BM_RansacHomography)->Unit(benchmark::kMicrosecond);

// Two full pretraining iterations of the desk detector at batch 4, so the
// figure includes batch construction and the optimizer step.
void BM_PretrainSteps(benchmark::State& state) {
  synth::SceneConfig scene;
  std::vector<synth::ImageSample> data;
  for (std::uint64_t i = 0; i < 8; ++i) data.push_back(synth::render_scene(scene, i));
  pipeline::TrainConfig cfg;
  cfg.stage = pipeline::Stage::Pretrain;
  cfg.iterations = 2;
  cfg.batch_size = 4;
  cfg.checkpoint_interval = 2;
  cfg.model.semantic_head = false;
  cfg.validation.descriptors = false;
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::pretrain_magicpoint(cfg, data, {}));
}
BENCHMARK(BM_PretrainSteps)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
