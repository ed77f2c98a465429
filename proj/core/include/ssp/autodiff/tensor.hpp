#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssp/common/error.hpp"

namespace ssp::ad {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Every differentiable primitive the engine knows. The reshaping adapters
// at the end exist because there is no implicit broadcasting.
enum class OpKind : std::uint8_t {
  Conv2d,
  BatchNorm,
  Relu,
  MaxPool2x2,
  Linear,
  Softmax,
  Log,
  Exp,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Sum,
  Mean,
  Dot,
  Hinge,
  L2Normalize,
  Reshape,
  ToChannelsLast,
  GatherRows,
  SliceBatch,
};

inline constexpr int kOpKindCount = static_cast<int>(OpKind::SliceBatch) + 1;

std::string_view op_name(OpKind kind);

template <class T>
struct TensorImpl;

// One recorded operation. `backward` reads the output's accumulated
// gradient and adds its contribution into the inputs' gradients.
template <class T>
struct GraphNode {
  OpKind kind;
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  std::function<void(TensorImpl<T>& out)> backward;
  std::uint64_t sequence = 0;  // creation order, strictly increasing
};

template <class T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::string name;
  std::shared_ptr<GraphNode<T>> node;

  // Zero-initialized on first use.
  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

// Shared handle to an n-dimensional array. Copies alias the same storage,
// which is what lets a graph node refer to its inputs.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  std::vector<T>& values() { return impl_->data; }
  const std::vector<T>& values() const { return impl_->data; }
  // Empty span if no gradient has been accumulated.
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad() { return {impl_->grad_buffer(), impl_->data.size()}; }
  bool has_grad() const { return !impl_->grad.empty(); }
  void zero_grad() { impl_->grad.clear(); }

  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    impl_->requires_grad = on;
    return *this;
  }
  const std::string& name() const { return impl_->name; }
  Tensor& set_name(std::string name) {
    impl_->name = std::move(name);
    return *this;
  }

  bool is_leaf() const { return !impl_->node; }
  const GraphNode<T>* node() const { return impl_->node.get(); }

  // New leaf holding a copy of the data, no graph history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  TensorImpl<T>* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl<T>>& shared() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

// Gradient recording is on by default; the guard disables it for the
// current thread (inference, finite-difference probes).
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

struct BackwardOptions {
  // Keeps the graph alive so a second backward can run over it (used for
  // per-task gradients of a shared encoder).
  bool retain_graph = false;
};

template <class T>
using GradientMap = std::map<std::string, Tensor<T>>;

// Reverse-mode sweep from a scalar root. Gradients accumulate into every
// tracked leaf; the returned map holds copies for the named ones.
template <class T>
GradientMap<T> backward(const Tensor<T>& root, BackwardOptions options = {});

// Attaches a node to `out` if any input tracks gradients. Returns true if a
// node was recorded (callers skip building the closure otherwise).
template <class T>
bool record(Tensor<T>& out, OpKind kind, std::vector<Tensor<T>> inputs,
            std::function<void(TensorImpl<T>& out)> backward_fn);

template <class T>
bool needs_grad(std::initializer_list<const Tensor<T>*> inputs) {
  if (!grad_enabled()) return false;
  for (const auto* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

// True when `t` should receive a gradient contribution.
template <class T>
bool tracks(const TensorImpl<T>* t) {
  return t && t->requires_grad;
}

}  // namespace ssp::ad
