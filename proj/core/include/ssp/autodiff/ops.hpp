#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssp/autodiff/tensor.hpp"

namespace ssp::ad {

// Layout convention: images and feature maps are NCHW, matrices are
// row-major [rows, cols]. Reductions produce rank-0 scalars.

// Stride-1 convolution. x [N,C,H,W], weight [O,C,k,k], bias [O] or
// undefined. Output [N,O,H+2p-k+1,W+2p-k+1].
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int padding);

struct BatchNormOptions {
  bool training = true;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double epsilon = 1e-5;
};

// Per-channel normalization over every axis except 1. In training mode the
// batch statistics are used and the running buffers updated in place; in
// eval mode the running buffers are used and left untouched.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T> running_mean,
                     Tensor<T> running_var, const BatchNormOptions& options);

template <class T>
Tensor<T> relu(const Tensor<T>& x);

// Same math as relu; recorded under its own kind for the hinge losses.
template <class T>
Tensor<T> hinge(const Tensor<T>& x);

// 2x2 window, stride 2. H and W must be even.
template <class T>
Tensor<T> max_pool2x2(const Tensor<T>& x);

// x [N,K], weight [M,K], bias [M] or undefined -> [N,M].
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <class T>
Tensor<T> softmax(const Tensor<T>& x, int axis);

// log(max(x, floor)); the gradient is zero where the floor is active.
// floor = 0 gives the plain logarithm.
template <class T>
Tensor<T> log(const Tensor<T>& x, double floor = 0.0);

template <class T>
Tensor<T> exp(const Tensor<T>& x);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <class T>
Tensor<T> scale(const Tensor<T>& x, double factor);
template <class T>
Tensor<T> add_scalar(const Tensor<T>& x, double offset);

template <class T>
Tensor<T> sum(const Tensor<T>& x);
template <class T>
Tensor<T> mean(const Tensor<T>& x);

// Row-wise inner product: a [P,D], b [P,D] -> [P].
template <class T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b);

// x / max(||x||, eps) along `axis`.
template <class T>
Tensor<T> l2_normalize(const Tensor<T>& x, int axis, double eps = 1e-12);

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// [N,C,H,W] -> [N,H,W,C].
template <class T>
Tensor<T> to_channels_last(const Tensor<T>& x);

// x [R,D] -> [indices.size(), D].
template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<std::int64_t> indices);

// Items [begin, end) along axis 0.
template <class T>
Tensor<T> slice_batch(const Tensor<T>& x, std::int64_t begin, std::int64_t end);

// Attribute bag for the generic entry point below.
struct OpAttrs {
  int padding = 0;
  BatchNormOptions batch_norm{};
  int axis = 1;
  double scalar = 1.0;
  double floor = 0.0;
  double epsilon = 1e-12;
  Shape shape{};
  std::vector<std::int64_t> indices{};
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

// Dispatches by kind. Input arity per kind:
//   conv2d: x, weight[, bias]        batchnorm: x, gamma, beta, running_mean, running_var
//   linear: x, weight[, bias]        add/sub/mul/dot: a, b
//   everything else: x
template <class T>
Tensor<T> forward_primitive(OpKind kind, std::span<const Tensor<T>> inputs, const OpAttrs& attrs = {});

}  // namespace ssp::ad
