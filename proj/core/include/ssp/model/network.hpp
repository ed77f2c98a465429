#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssp/autodiff/tensor.hpp"

namespace ssp::model {

struct ModelConfig {
  int c_enc = 64;       // encoder output channels
  int desc_dim = 64;    // descriptor dimension D
  int num_classes = 5;  // semantic classes C
  int head_width = 256; // hidden width of every head's conv3x3 block
  // Output width of each of the four double_conv blocks; the last block's
  // second convolution emits c_enc instead.
  std::vector<int> widths{32, 32, 64, 64};
  bool semantic_head = true;  // SSp when true, Sp when false

  static ModelConfig desk();
  static ModelConfig paper();
  void validate() const;  // throws ConfigError

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Mode { Train, Eval };

// Which sub-network a tensor belongs to. The central-direction combiner
// treats Encoder parameters differently from the heads.
enum class Group : std::uint8_t { Encoder, Detector, Descriptor, Semantic };

inline constexpr int kDetectorChannels = 65;  // 8x8 cell positions + dustbin
inline constexpr int kDustbin = 64;
inline constexpr int kCell = 8;

template <class T>
struct Parameter {
  std::string name;
  ad::Tensor<T> tensor;
  Group group;
  bool trainable;  // false for batch-norm running statistics
};

template <class T>
struct HeadOutputs {
  ad::Tensor<T> detector;    // [N, 65, H/8, W/8] logits
  ad::Tensor<T> descriptor;  // [N, D, H/8, W/8] raw
  ad::Tensor<T> semantic;    // [N, C, H/8, W/8] logits; undefined for Sp
};

// Shared encoder with detector, descriptor and (optionally) semantic heads.
// T = float for training, double for gradient tests.
template <class T>
class Network {
 public:
  Network(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  // images [N, 1, H, W] with H, W divisible by 8 -> [N, c_enc, H/8, W/8].
  ad::Tensor<T> encoder_forward(const ad::Tensor<T>& images, Mode mode);
  ad::Tensor<T> detector_head(const ad::Tensor<T>& features, Mode mode);
  ad::Tensor<T> descriptor_head(const ad::Tensor<T>& features, Mode mode);
  // Throws ssp::Error on an Sp configuration.
  ad::Tensor<T> semantic_head(const ad::Tensor<T>& features, Mode mode);

  // Encoder plus every head; the semantic output is produced only when the
  // configuration has the head and `with_semantic` is set.
  HeadOutputs<T> forward(const ad::Tensor<T>& images, Mode mode, bool with_semantic = true);

  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  std::vector<ad::Tensor<T>> trainable(Group group) const;
  std::vector<ad::Tensor<T>> trainable() const;
  ad::Tensor<T>& at(const std::string& name);
  const ad::Tensor<T>& at(const std::string& name) const;
  std::size_t parameter_count() const;  // trainable scalars

 private:
  ad::Tensor<T>& add(const std::string& name, ad::Shape shape, Group group, bool trainable);
  ad::Tensor<T> conv_bn_relu(const ad::Tensor<T>& x, const std::string& prefix, Mode mode);
  ad::Tensor<T> head(const ad::Tensor<T>& x, const std::string& prefix, Mode mode);
  void add_conv_bn(const std::string& prefix, int in, int out, Group group);
  void add_head(const std::string& prefix, int in, int out, Group group);

  ModelConfig config_;
  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

extern template class Network<float>;
extern template class Network<double>;

// Kaiming-uniform bound sqrt(6 / fan_in) for a conv weight [O, C, k, k].
double kaiming_bound(const ad::Shape& weight_shape);

}  // namespace ssp::model
