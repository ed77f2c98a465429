#include "ssp/autodiff/tensor.hpp"

#include <algorithm>
#include <unordered_set>

namespace ssp::ad {
namespace {

thread_local bool g_grad_enabled = true;
thread_local std::uint64_t g_sequence = 0;

constexpr std::string_view kOpNames[kOpKindCount] = {
    "conv2d", "batchnorm", "relu",    "maxpool2x2", "linear",       "softmax",          "log",
    "exp",    "add",       "sub",     "mul",        "scale",        "add_scalar",       "sum",
    "mean",   "dot",       "hinge",   "l2_normalize", "reshape",    "to_channels_last", "gather_rows",
    "slice_batch",
};

}  // namespace

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape " + to_string(shape));
    n *= e;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::string_view op_name(OpKind kind) {
  const int k = static_cast<int>(kind);
  if (k < 0 || k >= kOpKindCount) return "unknown";
  return kOpNames[k];
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->data.assign(static_cast<std::size_t>(ad::numel(shape)), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

template <class T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (static_cast<std::int64_t>(values.size()) != ad::numel(shape)) {
    throw ShapeError("data length " + std::to_string(values.size()) + " does not match shape " +
                     to_string(shape));
  }
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <class T>
std::int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape()));
  }
  return impl_->shape[axis];
}

template <class T>
T Tensor<T>::item() const {
  if (impl_->data.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return impl_->data[0];
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->name = impl_->name;
  return Tensor(std::move(impl));
}

template <class T>
bool record(Tensor<T>& out, OpKind kind, std::vector<Tensor<T>> inputs,
            std::function<void(TensorImpl<T>& out)> backward_fn) {
  if (!grad_enabled()) return false;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor<T>& t) { return t.defined() && t.requires_grad(); });
  if (!any) return false;
  auto node = std::make_shared<GraphNode<T>>();
  node->kind = kind;
  node->inputs.reserve(inputs.size());
  for (auto& t : inputs) node->inputs.push_back(t.shared());
  node->backward = std::move(backward_fn);
  node->sequence = ++g_sequence;
  out.impl()->node = std::move(node);
  out.impl()->requires_grad = true;
  return true;
}

template <class T>
GradientMap<T> backward(const Tensor<T>& root, BackwardOptions options) {
  if (!root.defined()) throw Error("backward on an undefined tensor");
  if (root.numel() != 1) throw ShapeError("backward requires a scalar root, got shape " + to_string(root.shape()));
  if (!root.requires_grad()) throw Error("backward root is not connected to any tracked tensor");

  // Collect every reachable node-bearing tensor and every tracked leaf.
  // Owning handles keep interior tensors alive while nodes are released.
  using Handle = std::shared_ptr<TensorImpl<T>>;
  std::vector<Handle> interior;
  std::vector<Handle> leaves;
  std::unordered_set<TensorImpl<T>*> seen;
  std::vector<Handle> stack{root.shared()};
  seen.insert(root.impl());
  while (!stack.empty()) {
    Handle t = std::move(stack.back());
    stack.pop_back();
    if (!t->node) {
      if (t->requires_grad) leaves.push_back(std::move(t));
      continue;
    }
    for (const auto& in : t->node->inputs) {
      if (in && seen.insert(in.get()).second) stack.push_back(in);
    }
    interior.push_back(std::move(t));
  }

  // Inputs are always created before their consumers, so descending
  // creation order is a reverse topological order.
  std::sort(interior.begin(), interior.end(),
            [](const Handle& a, const Handle& b) { return a->node->sequence > b->node->sequence; });

  root.impl()->grad_buffer()[0] += T(1);
  for (const Handle& t : interior) {
    if (t->grad.empty()) continue;
    if (!t->node->backward) {
      throw Error("no backward rule recorded for op '" + std::string(op_name(t->node->kind)) + "'");
    }
    t->node->backward(*t);
  }

  for (const Handle& t : interior) {
    t->grad.clear();
    t->grad.shrink_to_fit();
    if (!options.retain_graph) t->node.reset();
  }

  GradientMap<T> out;
  for (const Handle& t : leaves) {
    if (t->name.empty()) continue;
    auto copy = std::make_shared<TensorImpl<T>>();
    copy->shape = t->shape;
    copy->data = t->grad.empty() ? std::vector<T>(t->data.size(), T(0)) : t->grad;
    copy->name = t->name;
    out.emplace(t->name, Tensor<T>(std::move(copy)));
  }
  return out;
}

template class Tensor<float>;
template class Tensor<double>;
template bool record<float>(Tensor<float>&, OpKind, std::vector<Tensor<float>>,
                            std::function<void(TensorImpl<float>&)>);
template bool record<double>(Tensor<double>&, OpKind, std::vector<Tensor<double>>,
                             std::function<void(TensorImpl<double>&)>);
template GradientMap<float> backward<float>(const Tensor<float>&, BackwardOptions);
template GradientMap<double> backward<double>(const Tensor<double>&, BackwardOptions);

}  // namespace ssp::ad
