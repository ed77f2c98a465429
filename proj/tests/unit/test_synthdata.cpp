#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "ssp/common/binary_io.hpp"
#include "ssp/synthdata/augment.hpp"
#include "ssp/synthdata/dataset_io.hpp"
#include "ssp/synthdata/scene.hpp"

namespace ssp::synth {
namespace {

namespace fs = std::filesystem;

SceneConfig single(Primitive p) {
  SceneConfig cfg;
  cfg.noise_sigma = 0;
  cfg.background_min = cfg.background_max = 0.1f;
  p.intensity = 0.9f;
  cfg.fixed_primitives = {std::move(p)};
  return cfg;
}

TEST(Scene, EllipseCenterKeypointAndMask) {
  Primitive e;
  e.kind = ShapeClass::Ellipse;
  e.center = {80, 60};
  e.radius_x = 20;
  e.radius_y = 12;
  const auto s = render_scene(single(e), 5);
  ASSERT_EQ(s.keypoints.size(), 1u);
  EXPECT_NEAR(s.keypoints[0].col, 80, 0.5);
  EXPECT_NEAR(s.keypoints[0].row, 60, 0.5);
  EXPECT_EQ(s.keypoints[0].score, 1.0);
  EXPECT_EQ(s.mask.at(60, 80), 4);
  EXPECT_EQ(s.mask.at(60, 95), 4);
  EXPECT_EQ(s.mask.at(60, 105), 0);
  EXPECT_EQ(s.mask.at(5, 5), 0);
}

TEST(Scene, QuadrilateralHasFourVertexKeypoints) {
  Primitive q;
  q.kind = ShapeClass::Quadrilateral;
  q.vertices = {{30, 20}, {120, 25}, {110, 90}, {40, 100}};
  const auto s = render_scene(single(q), 6);
  ASSERT_EQ(s.keypoints.size(), 4u);
  for (const auto& v : q.vertices) {
    bool found = false;
    for (const auto& k : s.keypoints) found |= std::hypot(k.col - v.x, k.row - v.y) <= 0.5;
    EXPECT_TRUE(found) << v.x << "," << v.y;
  }
  EXPECT_EQ(s.mask.at(60, 75), 2);
}

TEST(Scene, ZeroPrimitives) {
  SceneConfig cfg;
  cfg.min_primitives = cfg.max_primitives = 0;
  const auto s = render_scene(cfg, 7);
  EXPECT_TRUE(s.keypoints.empty());
  for (auto v : s.mask.values) EXPECT_EQ(v, 0);
}

TEST(Scene, PureFunctionOfSeed) {
  SceneConfig cfg;
  const auto a = render_scene(cfg, 99);
  const auto b = render_scene(cfg, 99);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.keypoints, b.keypoints);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_NE(render_scene(cfg, 100).image, a.image);
}

TEST(Scene, KeypointsInsideAndScoredOne) {
  SceneConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = render_scene(cfg, seed);
    for (const auto& k : s.keypoints) {
      EXPECT_EQ(k.score, 1.0);
      EXPECT_GE(k.row, 0);
      EXPECT_LE(k.row, cfg.height - 1);
      EXPECT_GE(k.col, 0);
      EXPECT_LE(k.col, cfg.width - 1);
    }
  }
}

TEST(Scene, KeypointsLieOnPrimitiveFeatures) {
  SceneConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = render_scene(cfg, seed);
    for (const auto& k : s.keypoints) {
      double best = 1e9;
      for (const auto& p : s.scene) {
        if (p.kind == ShapeClass::Ellipse) best = std::min(best, std::hypot(k.col - p.center.x, k.row - p.center.y));
        for (const auto& v : p.vertices) best = std::min(best, std::hypot(k.col - v.x, k.row - v.y));
      }
      EXPECT_LE(best, 0.5) << "seed " << seed;
    }
  }
}

TEST(Scene, AllEnabledClassesAppear) {
  SceneConfig cfg;
  cfg.height = 48;
  cfg.width = 64;
  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (auto v : render_scene(cfg, seed).mask.values) seen.insert(v);
  }
  EXPECT_EQ(seen, (std::set<int>{0, 1, 2, 3, 4}));
}

TEST(Scene, DisabledClassNeverDrawn) {
  SceneConfig cfg;
  cfg.enabled = {true, false, true, true};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (const auto& p : render_scene(cfg, seed).scene) EXPECT_NE(p.kind, ShapeClass::Quadrilateral);
  }
}

TEST(Scene, RejectsBadConfig) {
  SceneConfig cfg;
  cfg.max_primitives = 1;
  cfg.min_primitives = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
  SceneConfig odd;
  odd.enabled = {false, false, false, false};
  EXPECT_THROW(odd.validate(), ConfigError);
}

TEST(Scene, MajorityDownsample) {
  ClassMask m(8, 16, 0);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 5; ++c) m.at(r, c) = 2;      // 40 of 64 in block 0
    for (int c = 8; c < 12; ++c) m.at(r, c) = 3;     // exactly half of block 1
  }
  const auto d = downsample_majority(m);
  ASSERT_EQ(d.height, 1);
  ASSERT_EQ(d.width, 2);
  EXPECT_EQ(d.at(0, 0), 2);
  EXPECT_EQ(d.at(0, 1), 0);  // 32 vs 32 tie goes to the lower class
}

TEST(Augment, NoneIsIdentity) {
  const auto s = render_scene({}, 3);
  Rng rng(1);
  EXPECT_EQ(photometric_augment(s.image, rng, AugmentConfig::none()), s.image);
}

TEST(Augment, NoiseMeanStaysNearHalf) {
  // Mean of 19200 draws of N(0.5, 0.1), clamped: stderr ~7e-4, so 0.02 is
  // a very loose bound; the simulation runs 20 seeds.
  auto cfg = AugmentConfig::none();
  cfg.noise_sigma = 0.1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto out = photometric_augment(Image(120, 160, 0.5f), rng, cfg);
    double mean = 0;
    for (float v : out.values) mean += v;
    mean /= static_cast<double>(out.size());
    EXPECT_NEAR(mean, 0.5, 0.02);
  }
}

TEST(Augment, BrightnessClamps) {
  auto cfg = AugmentConfig::none();
  cfg.brightness_min = cfg.brightness_max = 0.4;
  Rng rng(2);
  const auto out = photometric_augment(Image(10, 10, 0.8f), rng, cfg);
  for (float v : out.values) EXPECT_EQ(v, 1.0f);
}

TEST(Augment, LabelsUntouched) {
  const auto s = render_scene({}, 4);
  Rng rng(3);
  const auto out = photometric_augment(s, rng, {});
  EXPECT_EQ(out.keypoints, s.keypoints);
  EXPECT_EQ(out.mask, s.mask);
  EXPECT_NE(out.image, s.image);
}

TEST(DatasetIo, RoundTrip) {
  std::vector<ImageSample> samples;
  for (std::uint64_t seed = 0; seed < 3; ++seed) samples.push_back(render_scene({}, seed));
  const auto back = decode_dataset(encode_dataset(samples));
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].image, samples[i].image);
    EXPECT_EQ(back[i].mask, samples[i].mask);
    EXPECT_EQ(back[i].seed, samples[i].seed);
    ASSERT_EQ(back[i].keypoints.size(), samples[i].keypoints.size());
    for (std::size_t k = 0; k < back[i].keypoints.size(); ++k) {
      EXPECT_EQ(back[i].keypoints[k].row, static_cast<float>(samples[i].keypoints[k].row));
    }
  }
}

TEST(DatasetIo, EmptyDatasetFile) {
  const auto path = (fs::temp_directory_path() / "ssp_empty_dataset.sspd").string();
  write_dataset({}, path);
  EXPECT_TRUE(read_dataset(path).empty());
  fs::remove(path);
}

TEST(DatasetIo, TruncationNamesTheRecord) {
  std::vector<ImageSample> samples{render_scene({}, 1), render_scene({}, 2)};
  auto bytes = encode_dataset(samples);
  bytes.resize(bytes.size() - 100);
  try {
    decode_dataset(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(e.field().find("record[1]"), std::string::npos) << e.what();
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(DatasetIo, BadMagic) {
  std::vector<std::uint8_t> bytes{'N', 'O', 'P', 'E', 1, 0};
  EXPECT_THROW(decode_dataset(bytes), FormatError);
}

}  // namespace
}  // namespace ssp::synth
