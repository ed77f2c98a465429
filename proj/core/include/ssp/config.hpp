#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ssp/common/text_config.hpp"
#include "ssp/eval/eval_set.hpp"
#include "ssp/eval/evaluate.hpp"
#include "ssp/pipeline/adaptation.hpp"
#include "ssp/pipeline/train_config.hpp"
#include "ssp/synthdata/scene.hpp"

namespace ssp {

enum class Scale { Desk, Paper };
std::string_view scale_name(Scale scale);
Scale parse_scale(std::string_view name);

// Everything one end-to-end run needs. Per-stage seeds and worker counts
// are derived from `seed` and `workers` by resolve().
struct RunConfig {
  std::string preset = "ssp-uni";
  Scale scale = Scale::Desk;
  std::uint64_t seed = 0;
  int workers = 1;

  synth::SceneConfig scene;
  std::size_t train_count = 2000;

  eval::EvalSetConfig eval_set;
  std::size_t eval_pairs = 100;
  std::size_t validation_pairs = 40;

  pipeline::TrainConfig pretrain;
  pipeline::AdaptationConfig adaptation;
  pipeline::TrainConfig train;
  eval::EvalConfig eval;

  // Propagates seed, workers, image size and evaluation settings into the
  // stage configurations.
  void resolve();
  void validate() const;
};

// Names: sp-uni, sp-unc, sp-ct, ssp-uni, ssp-unc, ssp-ct.
const std::vector<std::string>& preset_names();
RunConfig preset_config(std::string_view preset, Scale scale = Scale::Desk);

// Complete key = value snapshot; from_text(to_text(c), any) == c after
// resolve().
TextConfig to_text(const RunConfig& config);
// Overlays the keys present in `text` onto `base`. Unknown keys and
// malformed values raise ConfigError naming the key.
RunConfig from_text(const TextConfig& text, RunConfig base);

// Starts from the preset named by `run.preset` / `run.scale` in `text`
// (falling back to the given defaults), then overlays `text`.
RunConfig load_run_config(const TextConfig& text, std::string_view default_preset = "ssp-uni",
                          Scale default_scale = Scale::Desk);

}  // namespace ssp
