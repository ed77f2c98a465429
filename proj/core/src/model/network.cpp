#include "ssp/model/network.hpp"

#include <cmath>

#include "ssp/autodiff/ops.hpp"
#include "ssp/common/rng.hpp"

namespace ssp::model {

ModelConfig ModelConfig::desk() { return {}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.c_enc = 256;
  c.desc_dim = 256;
  c.widths = {64, 64, 128, 128};
  return c;
}

void ModelConfig::validate() const {
  if (c_enc < 8) throw ConfigError("model.c_enc", "must be >= 8");
  if (desc_dim < 8) throw ConfigError("model.desc_dim", "must be >= 8");
  if (num_classes < 2) throw ConfigError("model.num_classes", "must be >= 2");
  if (head_width < 1) throw ConfigError("model.head_width", "must be >= 1");
  if (widths.size() != 4) throw ConfigError("model.widths", "expected 4 block widths");
  for (int w : widths) {
    if (w < 1) throw ConfigError("model.widths", "block widths must be >= 1");
  }
}

double kaiming_bound(const ad::Shape& s) {
  const double fan_in = static_cast<double>(s[1] * s[2] * s[3]);
  return std::sqrt(6.0 / fan_in);
}

template <class T>
ad::Tensor<T>& Network<T>::add(const std::string& name, ad::Shape shape, Group group, bool trainable) {
  auto t = ad::Tensor<T>::zeros(std::move(shape), trainable);
  t.set_name(name);
  index_[name] = params_.size();
  params_.push_back({name, t, group, trainable});
  return params_.back().tensor;
}

template <class T>
void Network<T>::add_conv_bn(const std::string& prefix, int in, int out, Group group) {
  add(prefix + ".conv.weight", {out, in, 3, 3}, group, true);
  add(prefix + ".bn.gamma", {out}, group, true);
  add(prefix + ".bn.beta", {out}, group, true);
  add(prefix + ".bn.running_mean", {out}, group, false);
  add(prefix + ".bn.running_var", {out}, group, false);
}

template <class T>
void Network<T>::add_head(const std::string& prefix, int in, int out, Group group) {
  add_conv_bn(prefix + ".hidden", in, config_.head_width, group);
  add(prefix + ".out.weight", {out, config_.head_width, 1, 1}, group, true);
  add(prefix + ".out.bias", {out}, group, true);
}

template <class T>
Network<T>::Network(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  int in = 1;
  for (int b = 0; b < 4; ++b) {
    const std::string p = "enc.block" + std::to_string(b + 1);
    const int w = config_.widths[b];
    add_conv_bn(p + ".a", in, w, Group::Encoder);
    add_conv_bn(p + ".b", w, b == 3 ? config_.c_enc : w, Group::Encoder);
    in = w;
  }
  add_head("det", config_.c_enc, kDetectorChannels, Group::Detector);
  add_head("desc", config_.c_enc, config_.desc_dim, Group::Descriptor);
  // Declared last so Sp and SSp networks built from one seed draw identical
  // weights for everything they share.
  if (config_.semantic_head) add_head("sem", config_.c_enc, config_.num_classes, Group::Semantic);

  Rng rng(seed);
  for (auto& p : params_) {
    auto& data = p.tensor.values();
    if (p.name.ends_with(".weight")) {
      const double bound = kaiming_bound(p.tensor.shape());
      std::uniform_real_distribution<double> u(-bound, bound);
      for (auto& v : data) v = static_cast<T>(u(rng));
    } else if (p.name.ends_with(".gamma") || p.name.ends_with(".running_var")) {
      std::fill(data.begin(), data.end(), T(1));
    }
  }
}

template <class T>
ad::Tensor<T> Network<T>::conv_bn_relu(const ad::Tensor<T>& x, const std::string& p, Mode mode) {
  auto y = ad::conv2d(x, at(p + ".conv.weight"), ad::Tensor<T>{}, 1);
  ad::BatchNormOptions bn;
  bn.training = mode == Mode::Train;
  y = ad::batch_norm(y, at(p + ".bn.gamma"), at(p + ".bn.beta"), at(p + ".bn.running_mean"),
                     at(p + ".bn.running_var"), bn);
  return ad::relu(y);
}

template <class T>
ad::Tensor<T> Network<T>::head(const ad::Tensor<T>& x, const std::string& p, Mode mode) {
  auto h = conv_bn_relu(x, p + ".hidden", mode);
  return ad::conv2d(h, at(p + ".out.weight"), at(p + ".out.bias"), 0);
}

template <class T>
ad::Tensor<T> Network<T>::encoder_forward(const ad::Tensor<T>& images, Mode mode) {
  if (images.rank() != 4 || images.dim(1) != 1) {
    throw ShapeError("encoder expects [N, 1, H, W] images, got " + ad::to_string(images.shape()));
  }
  if (images.dim(2) % kCell != 0) {
    throw ShapeError("image height " + std::to_string(images.dim(2)) + " is not divisible by 8");
  }
  if (images.dim(3) % kCell != 0) {
    throw ShapeError("image width " + std::to_string(images.dim(3)) + " is not divisible by 8");
  }
  ad::Tensor<T> x = images;
  for (int b = 1; b <= 4; ++b) {
    const std::string p = "enc.block" + std::to_string(b);
    x = conv_bn_relu(x, p + ".a", mode);
    x = conv_bn_relu(x, p + ".b", mode);
    if (b < 4) x = ad::max_pool2x2(x);
  }
  return x;
}

template <class T>
ad::Tensor<T> Network<T>::detector_head(const ad::Tensor<T>& features, Mode mode) {
  return head(features, "det", mode);
}

template <class T>
ad::Tensor<T> Network<T>::descriptor_head(const ad::Tensor<T>& features, Mode mode) {
  return head(features, "desc", mode);
}

template <class T>
ad::Tensor<T> Network<T>::semantic_head(const ad::Tensor<T>& features, Mode mode) {
  if (!config_.semantic_head) throw Error("semantic head requested on a model built without it");
  return head(features, "sem", mode);
}

template <class T>
HeadOutputs<T> Network<T>::forward(const ad::Tensor<T>& images, Mode mode, bool with_semantic) {
  auto f = encoder_forward(images, mode);
  HeadOutputs<T> out;
  out.detector = detector_head(f, mode);
  out.descriptor = descriptor_head(f, mode);
  if (with_semantic && config_.semantic_head) out.semantic = semantic_head(f, mode);
  return out;
}

template <class T>
std::vector<ad::Tensor<T>> Network<T>::trainable(Group group) const {
  std::vector<ad::Tensor<T>> out;
  for (const auto& p : params_) {
    if (p.trainable && p.group == group) out.push_back(p.tensor);
  }
  return out;
}

template <class T>
std::vector<ad::Tensor<T>> Network<T>::trainable() const {
  std::vector<ad::Tensor<T>> out;
  for (const auto& p : params_) {
    if (p.trainable) out.push_back(p.tensor);
  }
  return out;
}

template <class T>
ad::Tensor<T>& Network<T>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("no parameter named '" + name + "'");
  return params_[it->second].tensor;
}

template <class T>
const ad::Tensor<T>& Network<T>::at(const std::string& name) const {
  return const_cast<Network*>(this)->at(name);
}

template <class T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += static_cast<std::size_t>(p.tensor.numel());
  }
  return n;
}

template class Network<float>;
template class Network<double>;

}  // namespace ssp::model
