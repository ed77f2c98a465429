#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssp/eval/eval_set.hpp"
#include "ssp/eval/evaluate.hpp"
#include "ssp/eval/metrics.hpp"
#include "ssp/eval/report.hpp"
#include "ssp/geometry/warp.hpp"
#include "support/oracles.hpp"

namespace ssp::eval {
namespace {

using geom::Homography;
using geom::KeypointSet;

constexpr ViewShape kShape{120, 160};

model::DescriptorSet basis(int dim, const std::vector<int>& axes) {
  model::DescriptorSet d;
  d.dim = dim;
  for (int a : axes) {
    for (int j = 0; j < dim; ++j) d.values.push_back(j == a ? 1.f : 0.f);
  }
  return d;
}

KeypointSet grid_points(int n, double spacing = 11) {
  KeypointSet k;
  for (int i = 0; i < n; ++i) k.push_back({10 + spacing * (i / 5), 10 + spacing * (i % 5), 1.0 - 0.01 * i});
  return k;
}

TEST(Repeatability, IdenticalAndDisjoint) {
  const auto k = grid_points(10);
  EXPECT_EQ(repeatability(k, k, Homography::identity(), kShape, 3)->repeatability, 1.0);
  EXPECT_EQ(repeatability({{10, 10, 1}}, {{100, 140, 1}}, Homography::identity(), kShape, 3)->repeatability, 0.0);
}

TEST(Repeatability, DistanceTwoExample) {
  const KeypointSet a{{10, 10, 1}}, b{{10, 12, 1}};
  EXPECT_EQ(repeatability(a, b, Homography::identity(), kShape, 3)->repeatability, 1.0);
  EXPECT_EQ(repeatability(a, b, Homography::identity(), kShape, 1)->repeatability, 0.0);
}

TEST(Repeatability, NothingCountedIsSkipped) {
  EXPECT_FALSE(repeatability({}, {}, Homography::identity(), kShape, 3));
}

TEST(Mle, IdenticalIsZeroAndOffsetIsTwo) {
  const auto k = grid_points(10);
  EXPECT_EQ(*repeatability(k, k, Homography::identity(), kShape, 3)->mle, 0.0);
  KeypointSet shifted = k;
  for (auto& p : shifted) p.col += 2;
  EXPECT_NEAR(*repeatability(k, shifted, Homography::identity(), kShape, 3)->mle, 2.0, 1e-12);
  EXPECT_FALSE(repeatability({{10, 10, 1}}, {{100, 140, 1}}, Homography::identity(), kShape, 3)->mle);
}

TEST(NnMatches, IdentityEmptyAndTwoByTwo) {
  const auto d = basis(6, {0, 1, 2, 3, 4, 5});
  const auto m = nn_matches(d, d);
  ASSERT_EQ(m.size(), 6u);
  for (const auto& x : m) EXPECT_EQ(x.a, x.b);
  EXPECT_TRUE(nn_matches(d, basis(6, {})).empty());

  // Unit vectors with a . b = [[0.9, 0.1], [0.2, 0.8]].
  model::DescriptorSet a = basis(4, {0, 1}), b;
  b.dim = 4;
  b.values = {0.9f, 0.2f, static_cast<float>(std::sqrt(0.15)), 0.f,
              0.1f, 0.8f, 0.f, static_cast<float>(std::sqrt(0.35))};
  const auto m2 = nn_matches(a, b);
  ASSERT_EQ(m2.size(), 2u);
  EXPECT_EQ(m2[0].a, 0u);
  EXPECT_EQ(m2[0].b, 0u);
  EXPECT_EQ(m2[1].a, 1u);
  EXPECT_EQ(m2[1].b, 1u);
  EXPECT_NEAR(m2[0].similarity, 0.9, 1e-6);
}

TEST(AveragePrecision, ScriptedExamples) {
  const std::vector<bool> r{true, false, true};
  EXPECT_NEAR(average_precision(r), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(average_precision(r), 0.8333, 1e-4);
  EXPECT_DOUBLE_EQ(average_precision({true, true, true}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({false, false}), 0.0);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<bool> ranked(1 + t % 17);
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i] = uniform(rng, 0, 1) < 0.5;
    EXPECT_NEAR(average_precision(ranked), ssp::testing::reference_ap(ranked), 1e-12);
  }
}

TEST(Matching, IdenticalViewsScoreOne) {
  const auto k = grid_points(10);
  const auto d = basis(10, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto r = matching_metrics(k, d, k, d, Homography::identity(), kShape, 3);
  EXPECT_EQ(*r.matching_score, 1.0);
  EXPECT_EQ(*r.nn_map, 1.0);
}

TEST(Matching, HalfCorrect) {
  const auto k = grid_points(10);
  const auto da = basis(10, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  // The last five descriptors are rotated among far-apart points.
  const auto db = basis(10, {0, 1, 2, 3, 4, 9, 5, 6, 7, 8});
  const auto r = matching_metrics(k, da, k, db, Homography::identity(), kShape, 3);
  EXPECT_EQ(r.matches, 10u);
  EXPECT_EQ(r.correct, 5u);
  EXPECT_DOUBLE_EQ(*r.matching_score, 0.5);
}

TEST(Matching, AllWrong) {
  // Descriptors cyclically shifted across far-apart points: every mutual
  // match pairs two different locations.
  const auto k = grid_points(4, 30);
  const auto da = basis(8, {0, 1, 2, 3});
  const auto db = basis(8, {1, 2, 3, 0});
  const auto r = matching_metrics(k, da, k, db, Homography::identity(), kShape, 3);
  EXPECT_EQ(r.matches, 4u);
  EXPECT_EQ(r.correct, 0u);
  EXPECT_EQ(*r.nn_map, 0.0);
  EXPECT_EQ(*r.matching_score, 0.0);
}

TEST(Matching, EmptySharedRegionSkipped) {
  const auto d = basis(2, {0});
  const auto r = matching_metrics({{10, 10, 1}}, d, {}, basis(2, {}), Homography::identity(), kShape, 3);
  EXPECT_FALSE(r.matching_score);
  EXPECT_FALSE(r.nn_map);
}

TEST(HomographyMetric, CornerArithmetic) {
  const Homography h = Homography::translation(4, -3);
  EXPECT_NEAR(mean_corner_error(h, h, kShape), 0.0, 1e-12);
  const auto off = geom::compose(Homography::translation(2, 0), h);
  EXPECT_NEAR(mean_corner_error(h, off, kShape), 2.0, 1e-12);
}

TEST(HomographyMetric, PerfectMatchesCorrectEverywhere) {
  Rng rng(3);
  const auto h = geom::sample_homography({}, 120, 160, rng);
  KeypointSet a, b;
  for (int i = 0; i < 30; ++i) {
    const geom::Point p{uniform(rng, 20, 140), uniform(rng, 20, 100)};
    const auto q = h.apply(p);
    a.push_back({p.y, p.x, 1});
    b.push_back({q->y, q->x, 1});
  }
  std::vector<int> axes(30);
  std::iota(axes.begin(), axes.end(), 0);
  const auto d = basis(30, axes);
  const auto r = homography_estimation(a, d, b, d, h, kShape, {1, 3, 5}, {});
  EXPECT_FALSE(r.estimation_failed);
  EXPECT_TRUE(r.correct[0] && r.correct[1] && r.correct[2]);
  EXPECT_LT(*r.corner_error, 1e-6);
}

TEST(HomographyMetric, TwoPixelOffsetPassesAtThreeAndFive) {
  // Every B point is displaced 2 px right of its true location, so the fit
  // recovers translation(2) * H: corner error 2.
  const Homography h = Homography::translation(3, 1);
  KeypointSet a, b;
  Rng rng(4);
  for (int i = 0; i < 25; ++i) {
    const geom::Point p{uniform(rng, 10, 140), uniform(rng, 10, 100)};
    a.push_back({p.y, p.x, 1});
    b.push_back({p.y + 1, p.x + 3 + 2, 1});
  }
  std::vector<int> axes(25);
  std::iota(axes.begin(), axes.end(), 0);
  const auto d = basis(25, axes);
  const auto r = homography_estimation(a, d, b, d, h, kShape, {1, 3, 5}, {});
  EXPECT_NEAR(*r.corner_error, 2.0, 1e-6);
  EXPECT_FALSE(r.correct[0]);
  EXPECT_TRUE(r.correct[1]);
  EXPECT_TRUE(r.correct[2]);
}

TEST(HomographyMetric, ThreeMatchesFail) {
  const auto k = grid_points(3);
  const auto d = basis(3, {0, 1, 2});
  const auto r = homography_estimation(k, d, k, d, Homography::identity(), kShape, {1, 3, 5}, {});
  EXPECT_TRUE(r.estimation_failed);
  EXPECT_FALSE(r.correct[0] || r.correct[1] || r.correct[2]);
}

struct RandomPair {
  Homography h;
  KeypointSet a, b;
  model::DescriptorSet da, db;
};

RandomPair random_pair(std::uint64_t seed) {
  Rng rng(seed);
  RandomPair p;
  p.h = geom::sample_homography({}, 120, 160, rng);
  const int dim = 8;
  p.da.dim = p.db.dim = dim;
  const auto add = [&](KeypointSet& k, model::DescriptorSet& d, int n) {
    for (int i = 0; i < n; ++i) {
      k.push_back({uniform(rng, 0, 119), uniform(rng, 0, 159), 1});
      double norm = 0;
      std::vector<float> v(dim);
      for (auto& x : v) {
        x = static_cast<float>(uniform(rng, -1, 1));
        norm += double(x) * x;
      }
      for (auto& x : v) d.values.push_back(static_cast<float>(x / std::sqrt(norm)));
    }
  };
  add(p.a, p.da, 40);
  // Half of B are noisy copies of warped A points so some repeat.
  for (int i = 0; i < 20; ++i) {
    if (auto q = p.h.apply({p.a[i].col, p.a[i].row}); q && q->x >= 0 && q->y >= 0 && q->x <= 159 && q->y <= 119) {
      p.b.push_back({q->y + uniform(rng, -2, 2), q->x + uniform(rng, -2, 2), 1});
      for (int j = 0; j < dim; ++j) p.db.values.push_back(p.da.values[i * dim + j]);
    }
  }
  add(p.b, p.db, 20);
  return p;
}

TEST(Invariants, RangesOverRandomPairs) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto p = random_pair(s);
    const auto rep = repeatability(p.a, p.b, p.h, kShape, 3);
    ASSERT_TRUE(rep);
    EXPECT_GE(rep->repeatability, 0.0);
    EXPECT_LE(rep->repeatability, 1.0);
    if (rep->mle) {
      EXPECT_GE(*rep->mle, 0.0);
      EXPECT_LE(*rep->mle, 3.0);
    }
    const auto m = matching_metrics(p.a, p.da, p.b, p.db, p.h, kShape, 3);
    if (m.nn_map) {
      EXPECT_GE(*m.nn_map, 0.0);
      EXPECT_LE(*m.nn_map, 1.0);
    }
    if (m.matching_score) {
      EXPECT_GE(*m.matching_score, 0.0);
      EXPECT_LE(*m.matching_score, 1.0);
    }
  }
}

TEST(Invariants, SymmetricUnderViewSwap) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto p = random_pair(100 + s);
    const auto inv = p.h.inverse();
    EXPECT_NEAR(repeatability(p.a, p.b, p.h, kShape, 3)->repeatability,
                repeatability(p.b, p.a, inv, kShape, 3)->repeatability, 1e-9);
    const auto ab = matching_metrics(p.a, p.da, p.b, p.db, p.h, kShape, 3);
    const auto ba = matching_metrics(p.b, p.db, p.a, p.da, inv, kShape, 3);
    ASSERT_EQ(ab.matching_score.has_value(), ba.matching_score.has_value());
    if (ab.matching_score) EXPECT_NEAR(*ab.matching_score, *ba.matching_score, 1e-9);
  }
}

TEST(Invariants, PermutationOfKeypoints) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto p = random_pair(200 + s);
    const auto before_rep = repeatability(p.a, p.b, p.h, kShape, 3);
    const auto before = matching_metrics(p.a, p.da, p.b, p.db, p.h, kShape, 3);
    std::vector<std::size_t> perm(p.a.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), Rng(s));
    KeypointSet ka;
    model::DescriptorSet da;
    da.dim = p.da.dim;
    for (auto i : perm) {
      ka.push_back(p.a[i]);
      for (int j = 0; j < da.dim; ++j) da.values.push_back(p.da.values[i * da.dim + j]);
    }
    const auto after_rep = repeatability(ka, p.b, p.h, kShape, 3);
    const auto after = matching_metrics(ka, da, p.b, p.db, p.h, kShape, 3);
    EXPECT_NEAR(before_rep->repeatability, after_rep->repeatability, 1e-12);
    if (before_rep->mle) EXPECT_NEAR(*before_rep->mle, *after_rep->mle, 1e-9);
    EXPECT_EQ(before.correct, after.correct);
    if (before.matching_score) EXPECT_NEAR(*before.matching_score, *after.matching_score, 1e-12);
    if (before.nn_map) EXPECT_NEAR(*before.nn_map, *after.nn_map, 1e-12);
  }
}

EvalSetConfig plain_set() {
  EvalSetConfig cfg;
  cfg.photometric = synth::AugmentConfig::none();
  cfg.illumination_brightness = 0;
  cfg.illumination_contrast = 0;
  return cfg;
}

TEST(EvalSet, AlternatingConstruction) {
  const auto cfg = plain_set();
  const auto pairs = make_eval_set(cfg, 4, 5);
  ASSERT_EQ(pairs.size(), 4u);
  EXPECT_EQ(pairs[0].kind, PairKind::Illumination);
  EXPECT_EQ(pairs[0].h.matrix(), Homography::identity().matrix());
  EXPECT_EQ(pairs[1].kind, PairKind::Viewpoint);
  EXPECT_EQ(pairs[1].b, geom::warp_image(pairs[1].a, pairs[1].h, 120, 160));
}

TEST(EvalSet, PairDependsOnlyOnItsIndex) {
  const auto full = make_eval_set({}, 6, 9);
  const auto prefix = make_eval_set({}, 3, 9);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(full[i].a, prefix[i].a);
    EXPECT_EQ(full[i].b, prefix[i].b);
  }
}

TEST(EvalSet, FileRoundTrip) {
  const auto pairs = make_eval_set({}, 3, 2);
  const auto back = decode_eval_set(encode_eval_set(pairs));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].a, pairs[i].a);
    EXPECT_EQ(back[i].b, pairs[i].b);
    EXPECT_EQ(back[i].h.matrix(), pairs[i].h.matrix());
    EXPECT_EQ(back[i].kind, pairs[i].kind);
  }
}

model::ModelConfig tiny_model() {
  model::ModelConfig c;
  c.widths = {4, 4, 8, 8};
  c.c_enc = 16;
  c.desc_dim = 8;
  c.head_width = 16;
  return c;
}

TEST(EvaluateModel, IdenticalPairIsExact) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    model::Network<float> net(tiny_model(), seed);
    auto pairs = make_eval_set({}, 1, seed);
    pairs[0].b = pairs[0].a;
    pairs[0].h = Homography::identity();
    const auto r = evaluate_model(net, pairs, {});
    ASSERT_GT(r.pairs[0].keypoints_a, 0u);
    EXPECT_EQ(r.mean.repeatability, 1.0);
    EXPECT_EQ(r.mean.mle, 0.0);
    EXPECT_EQ(r.mean.matching_score, 1.0);
  }
}

TEST(EvaluateModel, EmptySetRejected) {
  model::Network<float> net(tiny_model(), 1);
  EXPECT_THROW(evaluate_model(net, std::vector<EvalPair>{}, {}), Error);
}

TEST(EvaluateModel, DeterministicReport) {
  model::Network<float> net(tiny_model(), 4);
  const auto pairs = make_eval_set({}, 4, 4);
  EvalConfig cfg;
  cfg.seed = 77;
  const auto first = report_json(evaluate_model(net, pairs, cfg, "m"));
  EXPECT_EQ(first, report_json(evaluate_model(net, pairs, cfg, "m")));
  auto parallel = cfg;
  parallel.workers = 3;
  const auto threaded = parse_report_json(report_json(evaluate_model(net, pairs, parallel, "m")));
  const auto serial = parse_report_json(first);
  EXPECT_EQ(threaded.mean.matching_score, serial.mean.matching_score);
  EXPECT_EQ(threaded.mean.repeatability, serial.mean.repeatability);
  EXPECT_EQ(threaded.mean.he[1], serial.mean.he[1]);
}

MetricReport named(const std::string& name, double ms, double rep = 0.5, double mle = 1.0) {
  MetricReport r;
  r.model = name;
  r.mean.matching_score = ms;
  r.mean.repeatability = rep;
  r.mean.mle = mle;
  return r;
}

TEST(Report, JsonRoundTrip) {
  model::Network<float> net(tiny_model(), 5);
  const auto r = evaluate_model(net, make_eval_set({}, 2, 5), {}, "net");
  const auto back = parse_report_json(report_json(r));
  EXPECT_EQ(back.model, "net");
  EXPECT_EQ(back.pairs.size(), 2u);
  EXPECT_EQ(back.mean.matching_score, r.mean.matching_score);
  EXPECT_EQ(report_json(back), report_json(r));
}

TEST(Report, CsvColumnOrder) {
  const auto csv = reports_csv({named("a", 0.1), named("b", 0.2)});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,HE@1,HE@3,HE@5,Rep.,MLE,NN mAP,M.S.");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Report, RankingByMatchingScore) {
  EXPECT_EQ(rank_reports({named("sp-uni", 0.519), named("ssp-unc", 0.522)}), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(rank_reports({named("x", 0.5, 0.55), named("y", 0.5, 0.60)}), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(rank_reports({named("x", 0.5, 0.6, 1.2), named("y", 0.5, 0.6, 0.9)}), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(rank_reports({named("a", 0.5), named("b", 0.5), named("c", 0.5)}), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(rank_reports({named("only", 0.3)}), (std::vector<std::size_t>{0}));
  const auto table = ranking_table({named("sp-uni", 0.519), named("ssp-unc", 0.522)});
  EXPECT_NE(table.find("ssp-unc"), std::string::npos);
  EXPECT_LT(table.find("ssp-unc"), table.find("sp-uni"));
  EXPECT_NE(table.substr(table.find("ssp-unc")).find("best"), std::string::npos);
}

}  // namespace
}  // namespace ssp::eval
