#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "ssp/autodiff/ops.hpp"
#include "ssp/geometry/nms.hpp"
#include "ssp/model/checkpoint.hpp"
#include "ssp/model/network.hpp"
#include "ssp/model/postprocess.hpp"

namespace ssp::model {
namespace {

using TF = ad::Tensor<float>;

ModelConfig small(bool semantic = true) {
  ModelConfig c;
  c.widths = {4, 4, 8, 8};
  c.c_enc = 16;
  c.desc_dim = 8;
  c.head_width = 16;
  c.semantic_head = semantic;
  return c;
}

TF random_images(int n, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(static_cast<std::size_t>(n) * h * w);
  for (auto& x : v) x = static_cast<float>(uniform(rng, 0, 1));
  return TF::from({n, 1, h, w}, std::move(v));
}

TEST(Encoder, OutputShapes) {
  Network<float> net(small(), 1);
  ad::NoGradGuard guard;
  EXPECT_EQ(net.encoder_forward(random_images(1, 8, 8, 1), Mode::Eval).shape(), (ad::Shape{1, 16, 1, 1}));
  EXPECT_EQ(net.encoder_forward(random_images(1, 120, 160, 2), Mode::Eval).shape(), (ad::Shape{1, 16, 15, 20}));
  EXPECT_EQ(net.encoder_forward(random_images(1, 240, 320, 3), Mode::Eval).shape(), (ad::Shape{1, 16, 30, 40}));
}

TEST(Encoder, RejectsIndivisibleShape) {
  Network<float> net(small(), 1);
  EXPECT_THROW(net.encoder_forward(random_images(1, 12, 16, 1), Mode::Eval), ShapeError);
}

TEST(Heads, ChannelCounts) {
  Network<float> net(small(), 2);
  ad::NoGradGuard guard;
  const auto out = net.forward(random_images(2, 120, 160, 4), Mode::Eval);
  EXPECT_EQ(out.detector.shape(), (ad::Shape{2, 65, 15, 20}));
  EXPECT_EQ(out.descriptor.shape(), (ad::Shape{2, 8, 15, 20}));
  EXPECT_EQ(out.semantic.shape(), (ad::Shape{2, 5, 15, 20}));
}

TEST(Heads, SpAndSspShareInferenceShapes) {
  Network<float> sp(small(false), 3), ssp(small(true), 3);
  ad::NoGradGuard guard;
  const auto img = random_images(1, 64, 64, 5);
  const auto a = sp.forward(img, Mode::Eval);
  const auto b = ssp.forward(img, Mode::Eval, false);
  EXPECT_EQ(a.detector.shape(), b.detector.shape());
  EXPECT_EQ(a.descriptor.shape(), b.descriptor.shape());
  EXPECT_FALSE(a.semantic.defined());
  EXPECT_FALSE(b.semantic.defined());
  EXPECT_THROW(sp.semantic_head(sp.encoder_forward(img, Mode::Eval), Mode::Eval), Error);
  for (const auto& p : sp.parameters()) EXPECT_EQ(ssp.at(p.name).shape(), p.tensor.shape()) << p.name;
}

TEST(Heads, SemanticHeadDoesNotChangeSharedOutputs) {
  Network<float> sp(small(false), 4), ssp(small(true), 4);
  for (const auto& p : sp.parameters()) {
    sp.at(p.name).values() = ssp.at(p.name).values();
  }
  ad::NoGradGuard guard;
  const auto img = random_images(1, 32, 48, 6);
  EXPECT_EQ(sp.forward(img, Mode::Eval).detector.values(), ssp.forward(img, Mode::Eval).detector.values());
}

TEST(Heads, ZeroDetectorOutputIsUniform) {
  Network<float> net(small(), 5);
  for (auto& v : net.at("det.out.weight").values()) v = 0;
  for (auto& v : net.at("det.out.bias").values()) v = 0;
  ad::NoGradGuard guard;
  const auto logits = net.detector_head(net.encoder_forward(random_images(1, 16, 24, 7), Mode::Eval), Mode::Eval);
  const auto p = ad::softmax(logits, 1);
  for (float v : p.values()) EXPECT_NEAR(v, 1.0 / 65, 1e-7);
}

TEST(Heads, ZeroDescriptorHeadGivesZeros) {
  Network<float> net(small(), 6);
  for (auto& v : net.at("desc.out.weight").values()) v = 0;
  for (auto& v : net.at("desc.out.bias").values()) v = 0;
  ad::NoGradGuard guard;
  const auto d = net.descriptor_head(net.encoder_forward(random_images(1, 16, 24, 8), Mode::Eval), Mode::Eval);
  for (float v : d.values()) EXPECT_EQ(v, 0.f);
}

TEST(Heads, ForwardUnderOneSecondAtDeskSize) {
  Network<float> net(ModelConfig::desk(), 7);
  ad::NoGradGuard guard;
  const auto img = random_images(1, 120, 160, 9);
  net.forward(img, Mode::Eval);  // warm caches
  const auto t0 = std::chrono::steady_clock::now();
  net.forward(img, Mode::Eval);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(s, 1.0);
}

TEST(Postprocess, ChannelToPixelMapping) {
  auto logits = TF::zeros({1, 65, 2, 3});
  // Cell (0, 0), channel 0 -> pixel (0, 0); cell (1, 2), channel 19 -> (8 + 2, 16 + 3).
  logits.values()[0 * 6 + 0] = 30.f;
  logits.values()[19 * 6 + 1 * 3 + 2] = 30.f;
  const auto heat = extract_heatmap(logits);
  ASSERT_EQ(heat.height, 16);
  ASSERT_EQ(heat.width, 24);
  EXPECT_GT(heat.at(0, 0), 0.99f);
  EXPECT_GT(heat.at(10, 19), 0.99f);
  EXPECT_LT(heat.at(0, 1), 1e-10f);
}

TEST(Postprocess, DustbinCellIsNearZero) {
  auto logits = TF::zeros({1, 65, 1, 1});
  logits.values()[kDustbin] = 30.f;
  const auto heat = extract_heatmap(logits);
  for (float v : heat.values) EXPECT_LT(v, 1e-12f);
}

TEST(Postprocess, HeatmapThenNmsRecoversEncodedPixels) {
  // One delta per cell on a chosen channel; cells far enough apart that the
  // radius never suppresses a neighbour.
  const int hc = 4, wc = 5;
  auto logits = TF::full({1, 65, hc, wc}, -20.f);
  std::vector<std::pair<int, int>> expect;
  for (int i = 0; i < hc; ++i) {
    for (int j = 0; j < wc; ++j) {
      if ((i + j) % 2) continue;
      const int k = (i * 7 + j * 3) % 64;
      logits.values()[(k * hc + i) * wc + j] = 20.f;
      expect.push_back({8 * i + k / 8, 8 * j + k % 8});
    }
  }
  const auto pts = geom::nms(extract_heatmap(logits), 2, 0.5f);
  ASSERT_EQ(pts.size(), expect.size());
  for (auto [r, c] : expect) {
    bool found = false;
    for (const auto& p : pts) found |= (p.row == r && p.col == c);
    EXPECT_TRUE(found) << r << "," << c;
  }
}

TEST(Postprocess, KeysKernel) {
  EXPECT_DOUBLE_EQ(keys_cubic(0), 1.0);
  EXPECT_DOUBLE_EQ(keys_cubic(1), 0.0);
  EXPECT_DOUBLE_EQ(keys_cubic(-1), 0.0);
  EXPECT_DOUBLE_EQ(keys_cubic(2), 0.0);
  EXPECT_DOUBLE_EQ(keys_cubic(0.5), 0.5625);
}

TEST(Postprocess, DescriptorAtCellCenterIsThatCell) {
  Rng rng(10);
  std::vector<float> v(4 * 3 * 3);
  for (auto& x : v) x = static_cast<float>(uniform(rng, -1, 1));
  const auto coarse = TF::from({1, 4, 3, 3}, v);
  const auto set = sample_descriptors(coarse, {{8 * 1 + 3.5, 8 * 2 + 3.5, 1}});
  ASSERT_EQ(set.size(), 1u);
  double n = 0;
  for (int d = 0; d < 4; ++d) n += double(v[(d * 3 + 1) * 3 + 2]) * v[(d * 3 + 1) * 3 + 2];
  n = std::sqrt(n);
  for (int d = 0; d < 4; ++d) EXPECT_NEAR(set.row(0)[d], v[(d * 3 + 1) * 3 + 2] / n, 1e-6);
}

TEST(Postprocess, ConstantMapGivesIdenticalUnitDescriptors) {
  auto coarse = TF::zeros({1, 3, 4, 4});
  for (int d = 0; d < 3; ++d) {
    for (int s = 0; s < 16; ++s) coarse.values()[d * 16 + s] = static_cast<float>(d + 1);
  }
  const auto set = sample_descriptors(coarse, {{1, 1, 1}, {17.3, 25.9, 1}, {31, 31, 1}});
  ASSERT_EQ(set.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(set.row(i)[d], (d + 1) / std::sqrt(14.0), 1e-6);
  }
}

TEST(Postprocess, DegenerateDescriptorReplaced) {
  const auto set = sample_descriptors(TF::zeros({1, 3, 2, 2}), {{4, 4, 1}});
  EXPECT_EQ(set.degenerate, 1u);
  EXPECT_EQ(set.row(0)[0], 1.f);
  EXPECT_EQ(set.row(0)[1], 0.f);
}

TEST(Checkpoint, RoundTripRestoresEveryTensor) {
  Network<float> a(small(), 11), b(small(), 12);
  const auto bytes = encode_checkpoint(snapshot(a, {{"mtl.eta_detector", TF::scalar(0.5f)}}));
  const auto ck = decode_checkpoint(bytes);
  restore(b, ck);
  for (const auto& p : a.parameters()) EXPECT_EQ(b.at(p.name).values(), p.tensor.values()) << p.name;
  ASSERT_NE(ck.find("mtl.eta_detector"), nullptr);
  EXPECT_EQ(ck.find("mtl.eta_detector")->item(), 0.5f);
  EXPECT_EQ(encode_checkpoint(snapshot(b, {{"mtl.eta_detector", TF::scalar(0.5f)}})), bytes);
}

TEST(Checkpoint, ConfigMismatchRejected) {
  Network<float> a(small(true), 1), b(small(false), 1);
  EXPECT_THROW(restore(b, snapshot(a)), ConfigError);
}

TEST(Checkpoint, TruncatedFileRejected) {
  Network<float> a(small(), 1);
  auto bytes = encode_checkpoint(snapshot(a));
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, InstantiateUsesStoredConfig) {
  Network<float> a(small(false), 13);
  const auto net = instantiate(snapshot(a));
  EXPECT_EQ(net.config(), a.config());
}

TEST(Init, DeterministicAndKaimingBounded) {
  Network<float> a(small(), 21), b(small(), 21), c(small(), 22);
  EXPECT_EQ(a.at("enc.block1.a.conv.weight").values(), b.at("enc.block1.a.conv.weight").values());
  EXPECT_NE(a.at("enc.block1.a.conv.weight").values(), c.at("enc.block1.a.conv.weight").values());
  for (const auto& p : a.parameters()) {
    if (p.name.find("conv.weight") == std::string::npos) continue;
    const double bound = kaiming_bound(p.tensor.shape());
    for (float v : p.tensor.values()) EXPECT_LE(std::abs(v), bound);
  }
}

}  // namespace
}  // namespace ssp::model
