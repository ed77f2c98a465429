#include "ssp/pipeline/run_dir.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ssp/common/binary_io.hpp"

namespace ssp::pipeline {
namespace fs = std::filesystem;

RunDir::RunDir(std::string root) : root_(std::move(root)) {
  for (const char* sub : {"checkpoints", "labels", "logs"}) fs::create_directories(fs::path(root_) / sub);
}

std::string RunDir::checkpoint_path(std::int64_t it) const {
  return (fs::path(root_) / "checkpoints" / ("iter_" + std::to_string(it) + ".sspc")).string();
}
std::string RunDir::adam_path(std::int64_t it) const { return adam_sidecar(checkpoint_path(it)); }
std::string RunDir::state_path(std::int64_t it) const { return state_sidecar(checkpoint_path(it)); }
std::string RunDir::best_path() const { return (fs::path(root_) / "checkpoints" / "best.sspc").string(); }
std::string RunDir::labels_path(const std::string& dataset) const {
  return (fs::path(root_) / "labels" / (dataset + ".sspd")).string();
}
std::string RunDir::metrics_path() const { return (fs::path(root_) / "logs" / "metrics.jsonl").string(); }
std::string RunDir::config_path() const { return (fs::path(root_) / "config.toml").string(); }
std::string RunDir::manifest_path() const { return (fs::path(root_) / "manifest.json").string(); }

void RunDir::append_metrics(const std::string& line) const {
  std::ofstream out(metrics_path(), std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot append to " + metrics_path());
  out << line << '\n';
}

void RunDir::truncate_metrics(std::int64_t iteration) const {
  if (!fs::exists(metrics_path())) return;
  std::istringstream in(io::read_text_file(metrics_path()));
  std::string kept, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("iteration") || j["iteration"].get<std::int64_t>() > iteration) continue;
    kept += line + "\n";
  }
  io::write_text_file(metrics_path(), kept);
}

std::string adam_sidecar(const std::string& path) {
  return (fs::path(path).replace_extension("").string()) + ".adam.sspc";
}

std::string state_sidecar(const std::string& path) {
  return (fs::path(path).replace_extension("").string()) + ".state.json";
}

std::string metrics_json(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["stage"] = r.stage;
  j["lr"] = r.lr;
  j["losses"] = r.losses;
  if (r.eta) j["eta"] = {{"detector", (*r.eta)[0]}, {"descriptor", (*r.eta)[1]}, {"semantic", (*r.eta)[2]}};
  if (!r.ct_weights.empty()) j["ct_weights"] = r.ct_weights;
  if (r.metrics) {
    const auto& m = *r.metrics;
    j["metrics"] = {{"HE@1", m.he[0]},           {"HE@3", m.he[1]}, {"HE@5", m.he[2]},
                    {"repeatability", m.repeatability}, {"mle", m.mle},   {"nn_map", m.nn_map},
                    {"matching_score", m.matching_score}};
  }
  j["skipped_steps"] = r.skipped_steps;
  return j.dump();
}

}  // namespace ssp::pipeline
