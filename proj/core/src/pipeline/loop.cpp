#include "loop.hpp"

#include <cmath>

#include "json.hpp"
#include "ssp/common/binary_io.hpp"
#include "ssp/pipeline/select.hpp"

namespace ssp::pipeline::detail {
namespace {

using nlohmann::ordered_json;

ordered_json aggregate_json(const eval::Aggregate& m) {
  return {{"he", {m.he[0], m.he[1], m.he[2]}}, {"repeatability", m.repeatability}, {"mle", m.mle},
          {"nn_map", m.nn_map}, {"matching_score", m.matching_score}};
}

eval::Aggregate aggregate_from(const ordered_json& j) {
  eval::Aggregate m;
  for (int t = 0; t < 3; ++t) m.he[t] = j.at("he").at(t).get<double>();
  m.repeatability = j.at("repeatability").get<double>();
  m.mle = j.at("mle").get<double>();
  m.nn_map = j.at("nn_map").get<double>();
  m.matching_score = j.at("matching_score").get<double>();
  return m;
}

void expect(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError("resume." + field, what);
}

}  // namespace

std::string encode_loop_state(const LoopState& s, const TrainConfig& cfg) {
  ordered_json j;
  j["iteration"] = s.iteration;
  j["seed"] = cfg.seed;
  j["stage"] = stage_name(cfg.stage);
  j["strategy"] = strategy_name(cfg.strategy);
  j["iterations"] = cfg.iterations;
  j["batch_size"] = cfg.batch_size;
  j["phase"] = s.phase;
  j["skipped_steps"] = s.skipped;
  ordered_json hist = ordered_json::array();
  for (const auto& h : s.ct.history) hist.push_back(std::vector<double>(h.begin(), h.end()));
  j["ct_history"] = std::move(hist);
  ordered_json evals = ordered_json::array();
  for (const auto& e : s.evaluations) {
    ordered_json item{{"iteration", e.iteration}, {"path", e.path}};
    item["metrics"] = e.metrics ? aggregate_json(*e.metrics) : ordered_json(nullptr);
    evals.push_back(std::move(item));
  }
  j["evaluations"] = std::move(evals);
  return j.dump(2) + "\n";
}

LoopState decode_loop_state(const std::string& text, const TrainConfig& cfg) {
  const auto j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("training state is not valid JSON", 0, "state");
  LoopState s;
  try {
    expect(j.at("seed").get<std::uint64_t>() == cfg.seed, "seed", "differs from the configured seed");
    expect(j.at("stage").get<std::string>() == stage_name(cfg.stage), "stage", "differs from the configured stage");
    expect(j.at("strategy").get<std::string>() == strategy_name(cfg.strategy), "strategy",
           "differs from the configured strategy");
    expect(j.at("iterations").get<std::int64_t>() == cfg.iterations, "iterations",
           "differs from the configured iteration count");
    expect(j.at("batch_size").get<int>() == cfg.batch_size, "batch_size", "differs from the configured batch size");
    s.iteration = j.at("iteration").get<std::int64_t>();
    s.phase = j.at("phase").get<std::string>();
    s.skipped = j.at("skipped_steps").get<std::int64_t>();
    for (const auto& h : j.at("ct_history")) {
      const auto v = h.get<std::vector<double>>();
      s.ct.history.emplace_back(v.begin(), v.end());
    }
    for (const auto& e : j.at("evaluations")) {
      Evaluation ev;
      ev.iteration = e.at("iteration").get<std::int64_t>();
      ev.path = e.at("path").get<std::string>();
      if (!e.at("metrics").is_null()) ev.metrics = aggregate_from(e.at("metrics"));
      s.evaluations.push_back(std::move(ev));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("training state is incomplete: ") + e.what(), 0, "state");
  }
  return s;
}

std::string write_checkpoint(const RunDir& run, const model::Checkpoint& ckpt, const AdamState& adam,
                             const LoopState& state, const TrainConfig& cfg) {
  const std::string path = run.checkpoint_path(state.iteration);
  model::save_checkpoint(ckpt, path);
  io::write_file(adam_sidecar(path), encode_adam_state(adam));
  io::write_text_file(state_sidecar(path), encode_loop_state(state, cfg));
  return path;
}

Resumed load_resume(const std::string& path, const TrainConfig& cfg) {
  Resumed r;
  r.checkpoint = model::load_checkpoint(path);
  r.adam = decode_adam_state(io::read_file(adam_sidecar(path)));
  r.state = decode_loop_state(io::read_text_file(state_sidecar(path)), cfg);
  return r;
}

void LossMeter::add(const std::map<std::string, double>& values) {
  for (const auto& [k, v] : values) sums_[k] += v;
  ++count_;
}

std::map<std::string, double> LossMeter::means() const {
  std::map<std::string, double> out;
  for (const auto& [k, v] : sums_) out[k] = count_ ? v / static_cast<double>(count_) : 0.0;
  return out;
}

eval::Aggregate validate(model::Network<float>& net, std::span<const eval::EvalPair> pairs,
                         const eval::EvalConfig& config, bool descriptors) {
  auto cfg = config;
  cfg.descriptors = descriptors;
  return eval::evaluate_model(net, pairs, cfg, "validation").mean;
}

std::size_t best_index(const std::vector<Evaluation>& evaluations, bool by_repeatability) {
  if (evaluations.empty()) throw Error("no checkpoint was evaluated");
  std::vector<eval::Aggregate> metrics;
  for (const auto& e : evaluations) {
    if (!e.metrics) return evaluations.size() - 1;
    metrics.push_back(*e.metrics);
  }
  return by_repeatability ? select_best_repeatability(metrics) : select_best(metrics);
}

void log(const TrainOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

}  // namespace ssp::pipeline::detail
