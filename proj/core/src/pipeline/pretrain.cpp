#include <cmath>

#include "loop.hpp"
#include "ssp/autodiff/ops.hpp"
#include "ssp/pipeline/batch.hpp"
#include "ssp/pipeline/train.hpp"

namespace ssp::pipeline {

TrainResult pretrain_magicpoint(const TrainConfig& cfg, std::span<const synth::ImageSample> dataset,
                                std::span<const eval::EvalPair> validation, const TrainOptions& opts) {
  cfg.validate();
  if (cfg.stage != Stage::Pretrain) throw ConfigError("train.stage", "pretraining needs stage 'pretrain'");
  if (dataset.empty()) throw Error("pretraining needs a non-empty dataset");

  model::Network<float> net(cfg.model, stream_seed(cfg.seed, Stream::Init));
  std::vector<ad::Tensor<float>> params = net.trainable(model::Group::Encoder);
  for (auto& t : net.trainable(model::Group::Detector)) params.push_back(t);
  const std::span<const ad::Tensor<float>> cparams(params);
  AdamState adam = make_adam_state(cparams, cfg.adam);

  detail::LoopState state;
  state.phase = "pretrain";
  model::Checkpoint best;
  std::string last_path;
  if (!opts.resume_from.empty()) {
    auto r = detail::load_resume(opts.resume_from, cfg);
    model::restore(net, r.checkpoint);
    check_adam_state(r.adam, cparams);
    adam = std::move(r.adam);
    state = std::move(r.state);
    last_path = opts.resume_from;
    if (!state.evaluations.empty()) {
      const auto& e = state.evaluations[detail::best_index(state.evaluations, true)];
      best = e.iteration == state.iteration ? r.checkpoint : model::load_checkpoint(e.path);
    }
    if (opts.run) opts.run->truncate_metrics(state.iteration);
  }

  detail::LossMeter meter;
  TrainResult result;
  for (std::int64_t it = state.iteration; it < cfg.iterations; ++it) {
    const double lr = lr_at(it, cfg.iterations, cfg.lr);
    const auto batch = make_pretrain_batch(dataset, cfg, it);
    const auto logits = net.detector_head(net.encoder_forward(batch.images, model::Mode::Train), model::Mode::Train);
    const auto loss = loss::detector_loss(logits, batch.targets, cfg.detector_loss);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw TrainingAborted("non-finite detector loss at iteration " + std::to_string(it), it, last_path);
    }
    ad::backward(loss);
    if (!adam_step(std::span<ad::Tensor<float>>(params), adam, lr)) {
      detail::log(opts, "iteration " + std::to_string(it) + ": non-finite gradient, step skipped");
    }
    for (auto& p : net.trainable()) p.zero_grad();
    meter.add({{"detector", value}});
    state.iteration = it + 1;
    state.skipped = adam.skipped;

    if (opts.log_every > 0 && state.iteration % opts.log_every == 0) {
      detail::log(opts, "pretrain " + std::to_string(state.iteration) + "/" + std::to_string(cfg.iterations) +
                            " loss " + std::to_string(meter.means()["detector"]));
    }
    if (state.iteration % cfg.checkpoint_interval != 0 && state.iteration != cfg.iterations) continue;

    Evaluation ev;
    ev.iteration = state.iteration;
    if (!validation.empty()) ev.metrics = detail::validate(net, validation, cfg.validation, false);
    if (opts.run) ev.path = opts.run->checkpoint_path(state.iteration);
    state.evaluations.push_back(ev);
    auto ckpt = model::snapshot(net);
    if (detail::best_index(state.evaluations, true) == state.evaluations.size() - 1) best = ckpt;

    MetricsRecord rec;
    rec.iteration = state.iteration;
    rec.stage = "pretrain";
    rec.lr = lr;
    rec.losses = meter.means();
    rec.metrics = ev.metrics;
    rec.skipped_steps = adam.skipped;
    if (opts.run) {
      last_path = detail::write_checkpoint(*opts.run, ckpt, adam, state, cfg);
      opts.run->append_metrics(metrics_json(rec));
    }
    detail::log(opts, "pretrain checkpoint " + std::to_string(state.iteration) +
                          (ev.metrics ? " repeatability " + std::to_string(ev.metrics->repeatability) : ""));
    result.final_losses = rec.losses;
    meter.reset();
  }

  if (state.evaluations.empty()) throw Error("pretraining finished without a checkpoint");
  const auto& chosen = state.evaluations[detail::best_index(state.evaluations, true)];
  result.best = std::move(best);
  result.best_iteration = chosen.iteration;
  result.evaluations = state.evaluations;
  result.skipped_steps = state.skipped;
  if (opts.run) {
    result.best_path = opts.run->best_path();
    model::save_checkpoint(result.best, result.best_path);
  }
  return result;
}

}  // namespace ssp::pipeline
