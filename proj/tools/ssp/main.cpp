#include <iostream>

#include "CLI11.hpp"
#include "ssp/cli/commands.hpp"
#include "ssp/config.hpp"

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::string scale;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Text config (key = value with [sections])");
  cmd->add_option("--preset", c.preset, "Preset: sp-uni, sp-unc, sp-ct, ssp-uni, ssp-unc, ssp-ct");
  cmd->add_option("--scale", c.scale, "Preset scale: desk or paper");
  cmd->add_option("--seed", c.seed, "Run seed");
  cmd->add_option("--workers", c.workers, "Worker threads for data preparation and evaluation");
  cmd->add_option("--out", c.out, "Output file or run directory");
  cmd->add_flag("--quiet", c.quiet, "Suppress progress output");
}

ssp::cli::Request to_request(const std::string& name, CLI::App* cmd, const Common& c) {
  ssp::cli::Request r;
  r.command = name;
  r.config_path = c.config;
  if (cmd->count("--preset")) r.preset = c.preset;
  if (cmd->count("--scale")) r.scale = c.scale;
  if (cmd->count("--seed")) r.seed = c.seed;
  if (cmd->count("--workers")) r.workers = c.workers;
  r.out = c.out;
  r.quiet = c.quiet;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keypoint detector / descriptor training with semantic multi-task losses"};
  app.set_version_flag("--version", std::string(ssp::cli::tool_version()));
  std::string manifest;
  std::string rerun_out;
  app.add_option("--manifest", manifest, "Re-run the command recorded in a manifest.json");
  app.add_option("--rerun-out", rerun_out, "Output location override for --manifest");
  app.require_subcommand(0, 1);

  Common common;
  std::map<std::string, std::string> options;
  std::vector<std::string> inputs;
  const auto opt = [&](CLI::App* cmd, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>("--" + key, [&options, key](const std::string& v) { options[key] = v; },
                                          help);
  };

  auto* gen = app.add_subcommand("gen", "Render a synthetic shapes dataset or an evaluation pair set");
  add_common(gen, common);
  opt(gen, "count", "Number of training images (default from config)");
  opt(gen, "kind", "train (SSPD dataset) or eval (SSPE pair set)");
  opt(gen, "pairs", "Number of evaluation pairs for --kind eval");

  auto* pretrain = app.add_subcommand("pretrain", "Train the detector on synthetic labels");
  add_common(pretrain, common);
  opt(pretrain, "data", "SSPD dataset");
  opt(pretrain, "resume", "Checkpoint to resume from");
  opt(pretrain, "validation", "SSPE validation pairs (default: generated from the seed)");

  auto* label = app.add_subcommand("label", "Pseudo-label a dataset by homographic adaptation");
  add_common(label, common);
  opt(label, "checkpoint", "Detector checkpoint");
  opt(label, "data", "SSPD dataset to label");

  auto* train = app.add_subcommand("train", "Joint detector / descriptor (/ semantic) training");
  add_common(train, common);
  opt(train, "data", "Labeled SSPD dataset");
  opt(train, "resume", "Checkpoint to resume from");
  opt(train, "validation", "SSPE validation pairs (default: generated from the seed)");

  auto* evaluate = app.add_subcommand("eval", "Evaluate checkpoints on warped image pairs");
  add_common(evaluate, common);
  opt(evaluate, "eval-set", "SSPE pair set (default: generated from the seed)");
  opt(evaluate, "pairs", "Number of generated pairs");
  opt(evaluate, "name", "Report name for a single checkpoint");
  evaluate->add_option("checkpoints", inputs, "Checkpoints to evaluate")->required();

  auto* compare = app.add_subcommand("compare", "Rank evaluation reports by matching score");
  add_common(compare, common);
  compare->add_option("reports", inputs, "Report JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ssp::cli::kExitUsage;
  }

  ssp::cli::Request request;
  if (!manifest.empty()) {
    try {
      request = ssp::cli::request_from_manifest(manifest);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return ssp::cli::kExitUsage;
    }
    if (!rerun_out.empty()) request.out = rerun_out;
  } else {
    CLI::App* chosen = nullptr;
    for (auto* cmd : app.get_subcommands()) chosen = cmd;
    if (!chosen) {
      std::cerr << app.help();
      return ssp::cli::kExitUsage;
    }
    request = to_request(chosen->get_name(), chosen, common);
    request.options = options;
    request.inputs = inputs;
  }
  return ssp::cli::run(request, std::cout, std::cerr);
}
