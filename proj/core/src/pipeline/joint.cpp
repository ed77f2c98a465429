#include <cmath>

#include "loop.hpp"
#include "ssp/autodiff/ops.hpp"
#include "ssp/losses/central_dir.hpp"
#include "ssp/pipeline/batch.hpp"
#include "ssp/pipeline/train.hpp"

namespace ssp::pipeline {
namespace {

using TensorF = ad::Tensor<float>;

struct HeadLosses {
  loss::TaskLosses<float> tasks;
  loss::DescriptorLoss<float> descriptor;
};

HeadLosses head_losses(model::Network<float>& net, const TensorF& features, const JointBatch& batch,
                       const TrainConfig& cfg) {
  const std::int64_t b = batch.batch_size;
  const auto mode = model::Mode::Train;
  HeadLosses out;
  const auto logits = net.detector_head(features, mode);
  out.tasks.detector1 = loss::detector_loss(ad::slice_batch(logits, 0, b), batch.targets1, cfg.detector_loss);
  out.tasks.detector2 = loss::detector_loss(ad::slice_batch(logits, b, 2 * b), batch.targets2, cfg.detector_loss);
  const auto coarse = net.descriptor_head(features, mode);
  out.descriptor = loss::descriptor_loss(ad::slice_batch(coarse, 0, b), ad::slice_batch(coarse, b, 2 * b),
                                         std::span<const loss::CorrespondenceSet>(batch.correspondences), cfg.hinge);
  out.tasks.descriptor = out.descriptor.total;
  if (cfg.model.semantic_head) {
    const auto sem = net.semantic_head(features, mode);
    out.tasks.semantic1 = loss::semantic_loss(ad::slice_batch(sem, 0, b), batch.labels1, cfg.class_weights);
    out.tasks.semantic2 = loss::semantic_loss(ad::slice_batch(sem, b, 2 * b), batch.labels2, cfg.class_weights);
  }
  return out;
}

std::map<std::string, double> loss_values(const HeadLosses& l) {
  std::map<std::string, double> v{{"detector1", l.tasks.detector1.item()},
                                  {"detector2", l.tasks.detector2.item()},
                                  {"descriptor", l.tasks.descriptor.item()}};
  if (l.descriptor.positive.defined()) v["descriptor_positive"] = l.descriptor.positive.item();
  if (l.descriptor.negative.defined()) v["descriptor_negative"] = l.descriptor.negative.item();
  if (l.tasks.has_semantic()) {
    v["semantic1"] = l.tasks.semantic1.item();
    v["semantic2"] = l.tasks.semantic2.item();
  }
  return v;
}

bool finite_values(const std::map<std::string, double>& values) {
  for (const auto& [k, v] : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Per-task weighted losses whose shared-encoder gradients are balanced.
std::vector<TensorF> ct_tasks(const loss::TaskLosses<float>& l, const loss::LossWeights& w) {
  std::vector<TensorF> t{ad::scale(ad::add(l.detector1, l.detector2), w.detector), ad::scale(l.descriptor, w.lambda)};
  if (l.has_semantic()) t.push_back(ad::scale(ad::add(l.semantic1, l.semantic2), w.semantic));
  return t;
}

std::vector<double> flatten_grads(std::span<TensorF> tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.numel());
  std::vector<double> out;
  out.reserve(n);
  for (const auto& t : tensors) {
    const auto g = t.grad();
    if (g.empty()) {
      out.insert(out.end(), static_cast<std::size_t>(t.numel()), 0.0);
    } else {
      out.insert(out.end(), g.begin(), g.end());
    }
  }
  return out;
}

void scatter_grads(std::span<TensorF> tensors, const std::vector<double>& values) {
  std::size_t k = 0;
  for (auto& t : tensors) {
    for (auto& g : t.mutable_grad()) g = static_cast<float>(values[k++]);
  }
}

// Central-dir step: head gradients come from each task's own loss, the
// encoder gradient is replaced by the combined direction. Returns the
// combiner's weights.
std::vector<double> central_dir_backward(model::Network<float>& net, const TensorF& features,
                                         const std::vector<TensorF>& tasks, const TrainConfig& cfg,
                                         const TensorF& detached, loss::CentralDirState& ct_state) {
  std::vector<TensorF> seeds;
  for (const auto& task : tasks) {
    ad::backward(task);
    auto leaf = detached;
    std::vector<float> g = leaf.has_grad() ? std::vector<float>(leaf.grad().begin(), leaf.grad().end())
                                           : std::vector<float>(static_cast<std::size_t>(leaf.numel()), 0.0f);
    seeds.push_back(TensorF::from(leaf.shape(), std::move(g)));
    leaf.zero_grad();
  }
  auto encoder = net.trainable(model::Group::Encoder);
  std::vector<std::vector<double>> grads;
  for (std::size_t t = 0; t < seeds.size(); ++t) {
    const auto probe = ad::sum(ad::mul(features, seeds[t]));
    ad::backward(probe, {.retain_graph = t + 1 < seeds.size()});
    grads.push_back(flatten_grads(encoder));
    for (auto& p : encoder) p.zero_grad();
  }
  const auto res = loss::central_dir_weights(grads, cfg.central_dir, ct_state);
  scatter_grads(encoder, res.combined);
  return res.weights;
}

}  // namespace

TrainResult joint_train(const TrainConfig& cfg, std::span<const synth::ImageSample> dataset,
                        std::span<const eval::EvalPair> validation, const TrainOptions& opts) {
  cfg.validate();
  if (cfg.stage != Stage::Joint) throw ConfigError("train.stage", "joint training needs stage 'joint'");
  if (dataset.empty()) throw Error("joint training needs a non-empty dataset");

  model::Network<float> net(cfg.model, stream_seed(cfg.seed, Stream::Init));
  auto eta = loss::UncertaintyParams<float>::make(cfg.eta_detector, cfg.eta_descriptor, cfg.eta_semantic);
  const bool uses_eta = cfg.strategy != Strategy::Uniform;
  const std::int64_t switch_at = cfg.switch_iteration();

  const auto phase_at = [&](std::int64_t it) {
    if (cfg.strategy == Strategy::CentralDir && it < switch_at) return Strategy::Uncertainty;
    return cfg.strategy;
  };
  const auto params_for = [&](Strategy phase) {
    auto params = net.trainable();
    if (phase == Strategy::Uncertainty) {
      params.push_back(eta.eta_detector);
      params.push_back(eta.eta_descriptor);
      if (cfg.model.semantic_head) params.push_back(eta.eta_semantic);
    }
    return params;
  };
  const auto lr_for = [&](std::int64_t it) {
    if (cfg.strategy != Strategy::CentralDir) return lr_at(it, cfg.iterations, cfg.lr);
    if (it < switch_at) return lr_at(it, switch_at, cfg.lr);
    return lr_at(it - switch_at, cfg.iterations - switch_at, cfg.lr);
  };
  const auto eta_values = [&] {
    return std::array<double, 3>{eta.eta_detector.item(), eta.eta_descriptor.item(), eta.eta_semantic.item()};
  };

  detail::LoopState state;
  state.phase = std::string(strategy_name(phase_at(0)));
  model::Checkpoint best;
  std::string last_path;
  Strategy active = phase_at(0);
  std::vector<TensorF> params = params_for(active);
  AdamState adam = make_adam_state(std::span<const TensorF>(params), cfg.adam);

  if (!opts.resume_from.empty()) {
    auto r = detail::load_resume(opts.resume_from, cfg);
    model::restore(net, r.checkpoint);
    if (uses_eta) {
      for (auto* t : {&eta.eta_detector, &eta.eta_descriptor, &eta.eta_semantic}) {
        const auto* saved = r.checkpoint.find(t->name());
        if (!saved) throw FormatError("checkpoint is missing tensor '" + t->name() + "'", 0, t->name());
        t->values() = saved->values();
      }
    }
    state = std::move(r.state);
    active = phase_at(std::max<std::int64_t>(state.iteration - 1, 0));
    params = params_for(active);
    check_adam_state(r.adam, std::span<const TensorF>(params));
    adam = std::move(r.adam);
    last_path = opts.resume_from;
    if (!state.evaluations.empty()) {
      const auto& e = state.evaluations[detail::best_index(state.evaluations, false)];
      best = e.iteration == state.iteration ? r.checkpoint : model::load_checkpoint(e.path);
    }
    if (opts.run) opts.run->truncate_metrics(state.iteration);
  }

  detail::LossMeter meter;
  std::vector<double> ct_weights;
  TrainResult result;
  for (std::int64_t it = state.iteration; it < cfg.iterations; ++it) {
    const Strategy phase = phase_at(it);
    if (phase != active) {
      // Warm start finished: fresh optimizer over the network weights only.
      active = phase;
      params = params_for(active);
      adam = make_adam_state(std::span<const TensorF>(params), cfg.adam);
      detail::log(opts, "iteration " + std::to_string(it) + ": switching to central-dir");
    }
    state.phase = std::string(strategy_name(phase));
    const double lr = lr_for(it);
    const auto batch = make_joint_batch(dataset, cfg, it);
    const auto features = net.encoder_forward(batch.images, model::Mode::Train);

    std::map<std::string, double> values;
    if (phase == Strategy::CentralDir) {
      auto detached = features.detach();
      detached.set_requires_grad(true);
      const auto losses = head_losses(net, detached, batch, cfg);
      values = loss_values(losses);
      const auto tasks = ct_tasks(losses.tasks, cfg.weights);
      double total = 0;
      for (const auto& t : tasks) total += t.item();
      values["total"] = total;
      if (!finite_values(values)) {
        throw TrainingAborted("non-finite loss at iteration " + std::to_string(it), it, last_path);
      }
      ct_weights = central_dir_backward(net, features, tasks, cfg, detached, state.ct);
    } else {
      const auto losses = head_losses(net, features, batch, cfg);
      values = loss_values(losses);
      const auto total = phase == Strategy::Uniform ? loss::uniform_total(losses.tasks, cfg.weights)
                                                    : loss::uncertainty_total(losses.tasks, eta);
      values["total"] = total.item();
      if (!finite_values(values)) {
        throw TrainingAborted("non-finite loss at iteration " + std::to_string(it), it, last_path);
      }
      ad::backward(total);
    }

    if (!adam_step(std::span<TensorF>(params), adam, lr)) {
      ++state.skipped;
      detail::log(opts, "iteration " + std::to_string(it) + ": non-finite gradient, step skipped");
    }
    for (auto& p : params) p.zero_grad();
    for (auto& p : net.trainable()) p.zero_grad();
    if (uses_eta && !eta.finite()) {
      throw TrainingAborted("non-finite uncertainty weight at iteration " + std::to_string(it), it, last_path);
    }
    meter.add(values);
    state.iteration = it + 1;

    if (opts.log_every > 0 && state.iteration % opts.log_every == 0) {
      detail::log(opts, "joint " + std::to_string(state.iteration) + "/" + std::to_string(cfg.iterations) +
                            " total " + std::to_string(meter.means()["total"]));
    }
    if (state.iteration % cfg.checkpoint_interval != 0 && state.iteration != cfg.iterations) continue;

    Evaluation ev;
    ev.iteration = state.iteration;
    if (!validation.empty()) ev.metrics = detail::validate(net, validation, cfg.validation, true);
    if (opts.run) ev.path = opts.run->checkpoint_path(state.iteration);
    state.evaluations.push_back(ev);
    std::vector<std::pair<std::string, TensorF>> extra;
    if (uses_eta) {
      for (const auto* t : {&eta.eta_detector, &eta.eta_descriptor, &eta.eta_semantic}) {
        extra.emplace_back(t->name(), t->detach());
      }
    }
    auto ckpt = model::snapshot(net, std::move(extra));
    if (detail::best_index(state.evaluations, false) == state.evaluations.size() - 1) best = ckpt;

    MetricsRecord rec;
    rec.iteration = state.iteration;
    rec.stage = "joint/" + state.phase;
    rec.lr = lr;
    rec.losses = meter.means();
    if (uses_eta) rec.eta = eta_values();
    if (phase == Strategy::CentralDir) rec.ct_weights = ct_weights;
    rec.metrics = ev.metrics;
    rec.skipped_steps = state.skipped;
    if (opts.run) {
      last_path = detail::write_checkpoint(*opts.run, ckpt, adam, state, cfg);
      opts.run->append_metrics(metrics_json(rec));
    }
    detail::log(opts, "joint checkpoint " + std::to_string(state.iteration) +
                          (ev.metrics ? " matching score " + std::to_string(ev.metrics->matching_score) : ""));
    result.final_losses = rec.losses;
    meter.reset();
  }

  if (state.evaluations.empty()) throw Error("joint training finished without a checkpoint");
  const auto& chosen = state.evaluations[detail::best_index(state.evaluations, false)];
  result.best = std::move(best);
  result.best_iteration = chosen.iteration;
  result.evaluations = state.evaluations;
  result.skipped_steps = state.skipped;
  if (uses_eta) result.eta = eta_values();
  if (opts.run) {
    result.best_path = opts.run->best_path();
    model::save_checkpoint(result.best, result.best_path);
  }
  return result;
}

}  // namespace ssp::pipeline
