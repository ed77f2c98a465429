#include "ssp/eval/evaluate.hpp"

#include "ssp/autodiff/tensor.hpp"
#include "ssp/common/parallel.hpp"
#include "ssp/common/rng.hpp"
#include "ssp/geometry/nms.hpp"
#include "ssp/model/postprocess.hpp"

namespace ssp::eval {

void EvalConfig::validate() const {
  if (top_k == 0) throw ConfigError("eval.top_k", "must be > 0");
  if (nms_radius < 0) throw ConfigError("eval.nms_radius", "must be >= 0");
  if (!(epsilon > 0)) throw ConfigError("eval.epsilon", "must be > 0");
  for (double t : he_thresholds) {
    if (!(t > 0)) throw ConfigError("eval.he_thresholds", "must be > 0");
  }
}

Detection detect(model::Network<float>& net, const Image& image, const EvalConfig& config) {
  ad::NoGradGuard no_grad;
  auto x = ad::Tensor<float>::from({1, 1, image.height, image.width}, image.values);
  const auto features = net.encoder_forward(x, model::Mode::Eval);
  const auto logits = net.detector_head(features, model::Mode::Eval);
  Detection d;
  d.keypoints = geom::nms(model::extract_heatmap(logits), config.nms_radius, config.detection_threshold, config.top_k);
  if (config.descriptors) {
    d.descriptors = model::sample_descriptors(net.descriptor_head(features, model::Mode::Eval), d.keypoints);
  }
  return d;
}

MetricReport evaluate_model(model::Network<float>& net, std::span<const EvalPair> pairs, const EvalConfig& config,
                            const std::string& model_name) {
  config.validate();
  if (pairs.empty()) throw Error("evaluation needs at least one pair");
  MetricReport report;
  report.model = model_name;
  report.config = config;
  report.pairs.resize(pairs.size());

  parallel_for(pairs.size(), config.workers, [&](std::size_t i) {
    const auto& pair = pairs[i];
    const ViewShape shape{pair.a.height, pair.a.width};
    const auto da = detect(net, pair.a, config);
    const auto db = detect(net, pair.b, config);
    auto& m = report.pairs[i];
    m.index = i;
    m.kind = pair.kind;
    m.keypoints_a = da.keypoints.size();
    m.keypoints_b = db.keypoints.size();
    if (const auto rep = repeatability(da.keypoints, db.keypoints, pair.h, shape, config.epsilon)) {
      m.repeatability = rep->repeatability;
      m.mle = rep->mle;
    }
    if (!config.descriptors) return;
    m.degenerate_descriptors = da.descriptors.degenerate + db.descriptors.degenerate;
    const auto mm = matching_metrics(da.keypoints, da.descriptors, db.keypoints, db.descriptors, pair.h, shape,
                                     config.epsilon);
    m.nn_map = mm.nn_map;
    m.matching_score = mm.matching_score;
    geom::RansacConfig ransac = config.ransac;
    ransac.seed = derive_seed(config.seed, i);
    const auto he = homography_estimation(da.keypoints, da.descriptors, db.keypoints, db.descriptors, pair.h, shape,
                                          config.he_thresholds, ransac);
    m.he_correct = he.correct;
    m.corner_error = he.corner_error;
    m.estimation_failed = he.estimation_failed;
  });

  std::size_t n_rep = 0, n_mle = 0, n_ms = 0;
  auto& agg = report.mean;
  for (const auto& m : report.pairs) {
    for (int t = 0; t < 3; ++t) agg.he[t] += m.he_correct[t] ? 1.0 : 0.0;
    if (m.repeatability) {
      agg.repeatability += *m.repeatability;
      ++n_rep;
    } else {
      ++report.repeatability_skipped;
    }
    if (m.mle) {
      agg.mle += *m.mle;
      ++n_mle;
    } else {
      ++report.mle_excluded;
    }
    if (!config.descriptors) continue;
    // Pairs without matches count as zero precision.
    if (m.nn_map) {
      agg.nn_map += *m.nn_map;
    } else {
      ++report.nn_map_flagged;
    }
    if (m.matching_score) {
      agg.matching_score += *m.matching_score;
      ++n_ms;
    } else {
      ++report.matching_skipped;
    }
    if (m.estimation_failed) ++report.estimation_failures;
  }
  const double n = static_cast<double>(report.pairs.size());
  for (double& v : agg.he) v /= n;
  agg.repeatability = n_rep ? agg.repeatability / static_cast<double>(n_rep) : 0.0;
  agg.mle = n_mle ? agg.mle / static_cast<double>(n_mle) : 0.0;
  agg.nn_map /= n;
  agg.matching_score = n_ms ? agg.matching_score / static_cast<double>(n_ms) : 0.0;
  return report;
}

}  // namespace ssp::eval
