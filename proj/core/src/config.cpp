#include "ssp/config.hpp"

#include <charconv>
#include <set>
#include <sstream>
#include <type_traits>

#include "ssp/pipeline/batch.hpp"

namespace ssp {
namespace {

std::string_view detector_loss_name(loss::DetectorLossKind k) {
  return k == loss::DetectorLossKind::LiteralBce ? "bce" : "categorical";
}

loss::DetectorLossKind parse_detector_loss(std::string_view s) {
  if (s == "bce") return loss::DetectorLossKind::LiteralBce;
  if (s == "categorical") return loss::DetectorLossKind::Categorical;
  throw ConfigError("detector_loss", "expected 'bce' or 'categorical', got '" + std::string(s) + "'");
}

template <class T>
std::string number_text(T v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
  } else {
    T out{};
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(key, "cannot parse '" + text + "'");
    return out;
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t[");
    const auto e = item.find_last_not_of(" \t]");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
constexpr bool is_vector = false;
template <class T>
constexpr bool is_vector<std::vector<T>> = true;
template <class T>
constexpr bool is_array = false;
template <class T, std::size_t N>
constexpr bool is_array<std::array<T, N>> = true;

class Writer {
 public:
  TextConfig out;

  template <class T>
  void operator()(const std::string& key, T& field) {
    if constexpr (std::is_same_v<T, std::string>) {
      out.set(key, field);
    } else if constexpr (is_vector<T> || is_array<T>) {
      std::string s;
      for (const auto& x : field) s += (s.empty() ? "" : ", ") + number_text(x);
      out.set(key, s);
    } else {
      out.set(key, number_text(field));
    }
  }

  template <class E, class Name, class Parse>
  void named(const std::string& key, E& field, Name name, Parse) {
    out.set(key, std::string(name(field)));
  }
};

class Reader {
 public:
  explicit Reader(const TextConfig& in) : in_(in) {}
  std::set<std::string> seen;

  template <class T>
  void operator()(const std::string& key, T& field) {
    seen.insert(key);
    const auto v = in_.get(key);
    if (!v) return;
    if constexpr (std::is_same_v<T, std::string>) {
      field = *v;
    } else if constexpr (is_vector<T>) {
      T parsed;
      for (const auto& s : split_list(*v)) parsed.push_back(parse_number<typename T::value_type>(key, s));
      field = std::move(parsed);
    } else if constexpr (is_array<T>) {
      const auto items = split_list(*v);
      if (items.size() != field.size()) {
        throw ConfigError(key, "expected " + std::to_string(field.size()) + " comma-separated values");
      }
      for (std::size_t i = 0; i < items.size(); ++i) {
        field[i] = parse_number<typename T::value_type>(key, items[i]);
      }
    } else {
      field = parse_number<T>(key, *v);
    }
  }

  template <class E, class Name, class Parse>
  void named(const std::string& key, E& field, Name, Parse parse) {
    seen.insert(key);
    const auto v = in_.get(key);
    if (!v) return;
    try {
      field = parse(*v);
    } catch (const ConfigError& e) {
      throw ConfigError(key, e.what());
    }
  }

 private:
  const TextConfig& in_;
};

template <class V>
void visit_model(V& v, const std::string& p, model::ModelConfig& m) {
  v(p + ".c_enc", m.c_enc);
  v(p + ".desc_dim", m.desc_dim);
  v(p + ".num_classes", m.num_classes);
  v(p + ".head_width", m.head_width);
  v(p + ".widths", m.widths);
  v(p + ".semantic_head", m.semantic_head);
}

template <class V>
void visit_homography(V& v, const std::string& p, geom::HomographySampleConfig& h) {
  v(p + ".scale_min", h.scale_min);
  v(p + ".scale_max", h.scale_max);
  v(p + ".rotation_min", h.rotation_min);
  v(p + ".rotation_max", h.rotation_max);
  v(p + ".translation_min", h.translation_min);
  v(p + ".translation_max", h.translation_max);
  v(p + ".perspective_min", h.perspective_min);
  v(p + ".perspective_max", h.perspective_max);
}

template <class V>
void visit_photometric(V& v, const std::string& p, synth::AugmentConfig& a) {
  v(p + ".noise_sigma", a.noise_sigma);
  v(p + ".brightness_min", a.brightness_min);
  v(p + ".brightness_max", a.brightness_max);
  v(p + ".contrast_min", a.contrast_min);
  v(p + ".contrast_max", a.contrast_max);
  v(p + ".blur_probability", a.blur_probability);
  v(p + ".blur_sigma_min", a.blur_sigma_min);
  v(p + ".blur_sigma_max", a.blur_sigma_max);
}

template <class V>
void visit_train(V& v, const std::string& p, pipeline::TrainConfig& t, bool joint) {
  v(p + ".iterations", t.iterations);
  v(p + ".batch_size", t.batch_size);
  v.named(p + ".lr_kind", t.lr.kind, pipeline::lr_kind_name, pipeline::parse_lr_kind);
  v(p + ".lr_fixed", t.lr.fixed);
  v(p + ".lr_start", t.lr.start);
  v(p + ".lr_end", t.lr.end);
  v(p + ".lr_power", t.lr.power);
  v(p + ".adam_beta1", t.adam.beta1);
  v(p + ".adam_beta2", t.adam.beta2);
  v(p + ".adam_epsilon", t.adam.epsilon);
  v(p + ".checkpoint_interval", t.checkpoint_interval);
  v.named(p + ".detector_loss", t.detector_loss, detector_loss_name, parse_detector_loss);
  if (!joint) v(p + ".homographic_augmentation", t.homographic_augmentation);
  if (joint) {
    v.named(p + ".strategy", t.strategy, pipeline::strategy_name, pipeline::parse_strategy);
    v(p + ".detector_weight", t.weights.detector);
    v(p + ".lambda", t.weights.lambda);
    v(p + ".semantic_weight", t.weights.semantic);
    v(p + ".m_p", t.hinge.m_p);
    v(p + ".m_n", t.hinge.m_n);
    v(p + ".positive_radius", t.correspondence.positive_radius);
    v(p + ".negative_count", t.correspondence.negative_count);
    v(p + ".negative_ratio", t.correspondence.negative_ratio);
    v(p + ".class_weights", t.class_weights);
    v(p + ".eta_detector", t.eta_detector);
    v(p + ".eta_descriptor", t.eta_descriptor);
    v(p + ".eta_semantic", t.eta_semantic);
    v(p + ".alpha", t.central_dir.alpha);
    v(p + ".window", t.central_dir.window);
    v(p + ".ct_max_iterations", t.central_dir.max_iterations);
    v(p + ".warm_start_fraction", t.warm_start_fraction);
  }
  visit_model(v, p + ".model", t.model);
  visit_homography(v, p + ".homography", t.homography);
  visit_photometric(v, p + ".photometric", t.photometric);
}

template <class V>
void visit(V& v, RunConfig& c) {
  v("run.preset", c.preset);
  v.named("run.scale", c.scale, scale_name, parse_scale);
  v("run.seed", c.seed);
  v("run.workers", c.workers);

  auto& s = c.scene;
  v("data.count", c.train_count);
  v("data.height", s.height);
  v("data.width", s.width);
  v("data.min_primitives", s.min_primitives);
  v("data.max_primitives", s.max_primitives);
  v("data.enabled", s.enabled);
  v("data.background_min", s.background_min);
  v("data.background_max", s.background_max);
  v("data.foreground_min", s.foreground_min);
  v("data.foreground_max", s.foreground_max);
  v("data.min_contrast", s.min_contrast);
  v("data.noise_sigma", s.noise_sigma);
  v("data.min_keypoint_separation", s.min_keypoint_separation);

  v("eval_set.pairs", c.eval_pairs);
  v("eval_set.validation_pairs", c.validation_pairs);
  v("eval_set.illumination_brightness", c.eval_set.illumination_brightness);
  v("eval_set.illumination_contrast", c.eval_set.illumination_contrast);
  visit_homography(v, "eval_set.homography", c.eval_set.homography);
  visit_photometric(v, "eval_set.photometric", c.eval_set.photometric);

  visit_train(v, "pretrain", c.pretrain, false);

  v("adaptation.num_homographies", c.adaptation.num_homographies);
  v("adaptation.threshold", c.adaptation.threshold);
  v("adaptation.nms_radius", c.adaptation.nms_radius);
  v("adaptation.top_k", c.adaptation.top_k);
  v("adaptation.batch_size", c.adaptation.batch_size);
  visit_homography(v, "adaptation.homography", c.adaptation.homography);

  visit_train(v, "train", c.train, true);

  v("eval.top_k", c.eval.top_k);
  v("eval.nms_radius", c.eval.nms_radius);
  v("eval.detection_threshold", c.eval.detection_threshold);
  v("eval.epsilon", c.eval.epsilon);
  v("eval.he_thresholds", c.eval.he_thresholds);
  v("eval.ransac_iterations", c.eval.ransac.max_iterations);
  v("eval.ransac_threshold", c.eval.ransac.inlier_threshold);
  v("eval.ransac_confidence", c.eval.ransac.confidence);
}

}  // namespace

std::string_view scale_name(Scale s) { return s == Scale::Desk ? "desk" : "paper"; }

Scale parse_scale(std::string_view s) {
  if (s == "desk") return Scale::Desk;
  if (s == "paper") return Scale::Paper;
  throw ConfigError("run.scale", "expected 'desk' or 'paper', got '" + std::string(s) + "'");
}

void RunConfig::resolve() {
  pretrain.stage = pipeline::Stage::Pretrain;
  train.stage = pipeline::Stage::Joint;
  pretrain.seed = seed;
  train.seed = seed;
  adaptation.seed = pipeline::stream_seed(seed, pipeline::Stream::Adaptation);
  eval.seed = pipeline::stream_seed(seed, pipeline::Stream::Evaluation);
  pretrain.workers = train.workers = adaptation.workers = eval.workers = workers;
  eval_set.scene = scene;
  pretrain.validation = eval;
  pretrain.validation.descriptors = false;
  train.validation = eval;
}

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("run.workers", "must be >= 1");
  if (validation_pairs == 0) throw ConfigError("eval_set.validation_pairs", "must be > 0");
  if (eval_pairs == 0) throw ConfigError("eval_set.pairs", "must be > 0");
  if (train.model.num_classes != synth::kNumClasses) {
    throw ConfigError("train.model.num_classes", "must equal the number of synthetic shape classes");
  }
  scene.validate();
  eval_set.homography.validate();
  eval_set.photometric.validate();
  pretrain.validate();
  adaptation.validate();
  train.validate();
  eval.validate();
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"sp-uni", "sp-unc", "sp-ct", "ssp-uni", "ssp-unc", "ssp-ct"};
  return names;
}

RunConfig preset_config(std::string_view preset, Scale scale) {
  const auto dash = preset.find('-');
  const auto family = preset.substr(0, dash);
  if (dash == std::string_view::npos || (family != "sp" && family != "ssp")) {
    throw ConfigError("run.preset", "unknown preset '" + std::string(preset) + "'");
  }
  RunConfig c;
  c.preset = std::string(preset);
  c.scale = scale;
  c.train.strategy = pipeline::parse_strategy(preset.substr(dash + 1));

  c.pretrain.stage = pipeline::Stage::Pretrain;
  c.pretrain.lr = pipeline::LrSchedule::constant(0.001);
  c.pretrain.iterations = 5000;
  c.pretrain.checkpoint_interval = 500;
  c.pretrain.model.semantic_head = false;

  c.train.stage = pipeline::Stage::Joint;
  c.train.lr = pipeline::LrSchedule::polynomial(0.0025, 0.001, 1.0);
  c.train.iterations = 10000;
  c.train.checkpoint_interval = 500;
  c.train.model.semantic_head = family == "ssp";
  c.adaptation = pipeline::AdaptationConfig::desk();

  if (scale == Scale::Paper) {
    c.scene.height = 240;
    c.scene.width = 320;
    c.pretrain.model = model::ModelConfig::paper();
    c.pretrain.model.semantic_head = false;
    c.train.model = model::ModelConfig::paper();
    c.train.model.semantic_head = family == "ssp";
    c.pretrain.iterations = 200000;
    c.train.iterations = 200000;
    c.pretrain.checkpoint_interval = 5000;
    c.train.checkpoint_interval = 5000;
    c.adaptation = pipeline::AdaptationConfig::paper();
    c.eval.top_k = 1000;
  }
  c.resolve();
  return c;
}

TextConfig to_text(const RunConfig& config) {
  Writer w;
  auto copy = config;
  visit(w, copy);
  return w.out;
}

RunConfig from_text(const TextConfig& text, RunConfig base) {
  Reader r(text);
  visit(r, base);
  for (const auto& [key, value] : text.values()) {
    if (!r.seen.count(key)) throw ConfigError(key, "unknown configuration key");
  }
  base.resolve();
  return base;
}

RunConfig load_run_config(const TextConfig& text, std::string_view default_preset, Scale default_scale) {
  const std::string preset = text.get_string("run.preset", std::string(default_preset));
  const Scale scale = text.has("run.scale") ? parse_scale(*text.get("run.scale")) : default_scale;
  return from_text(text, preset_config(preset, scale));
}

}  // namespace ssp
