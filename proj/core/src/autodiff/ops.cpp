#include "ssp/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace ssp::ad {
namespace {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapR = Eigen::Map<MatR<T>>;
template <class T>
using CMapR = Eigen::Map<const MatR<T>>;

template <class T>
Tensor<T> empty_like_shape(Shape shape) {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->data.resize(static_cast<std::size_t>(numel(shape)));
  impl->shape = std::move(shape);
  return Tensor<T>(std::move(impl));
}

// Sum of f(0..n-1) over eight interleaved lanes. The grouping depends only
// on the index, so results do not change with buffer alignment (vectorized
// Eigen reductions peel a misaligned head, which made training runs depend
// on heap layout).
template <class F>
double lane_sum(std::int64_t n, F&& f) {
  double acc[8] = {};
  std::int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += f(i + l);
  }
  for (; i < n; ++i) acc[i & 7] += f(i);
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <class T>
void require_rank(const Tensor<T>& t, int rank, const char* op, const char* arg) {
  require(t.defined(), std::string(op) + ": " + arg + " is undefined");
  require(t.rank() == rank, std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) + ", got shape " +
                                to_string(t.shape()));
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.defined() && b.defined(), std::string(op) + ": undefined operand");
  if (a.rank() != b.rank()) {
    throw ShapeError(std::string(op) + ": rank mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  for (int d = 0; d < a.rank(); ++d) {
    if (a.shape()[d] != b.shape()[d]) {
      throw ShapeError(std::string(op) + ": shape mismatch at dim " + std::to_string(d) + " (" +
                       std::to_string(a.shape()[d]) + " vs " + std::to_string(b.shape()[d]) + ")");
    }
  }
}

int normalize_axis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  require(axis >= 0 && axis < rank, std::string(op) + ": axis out of range");
  return axis;
}

// [outer, dim, inner] decomposition around an axis.
struct AxisSplit {
  std::int64_t outer = 1, dim = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, int axis) {
  AxisSplit s;
  for (int d = 0; d < axis; ++d) s.outer *= shape[d];
  s.dim = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
  return s;
}

template <class T>
std::vector<T>& scratch(int slot, std::size_t n) {
  thread_local std::vector<T> buffers[2];
  auto& b = buffers[slot];
  if (b.size() < n) b.resize(n);
  return b;
}

template <class T>
void im2col(const T* x, int channels, int h, int w, int k, int pad, int ho, int wo, T* cols) {
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = cols + (static_cast<std::size_t>((c * k + ki) * k + kj)) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy + ki - pad;
          T* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, T(0));
            continue;
          }
          const T* src = x + (static_cast<std::size_t>(c) * h + iy) * w;
          const int shift = kj - pad;
          const int lo = std::min(wo, std::max(0, -shift));
          const int hi = std::min(wo, w - shift);
          std::fill(dst, dst + std::max(lo, 0), T(0));
          if (hi > lo) std::copy(src + lo + shift, src + hi + shift, dst + lo);
          std::fill(dst + std::max(hi, lo), dst + wo, T(0));
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* cols, int channels, int h, int w, int k, int pad, int ho, int wo, T* x) {
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = cols + (static_cast<std::size_t>((c * k + ki) * k + kj)) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy + ki - pad;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * wo;
          T* dst = x + (static_cast<std::size_t>(c) * h + iy) * w;
          const int shift = kj - pad;
          const int lo = std::min(wo, std::max(0, -shift));
          const int hi = std::min(wo, w - shift);
          for (int ox = lo; ox < hi; ++ox) dst[ox + shift] += src[ox];
        }
      }
    }
  }
}

template <class T, class F, class G>
Tensor<T> unary(const Tensor<T>& x, OpKind kind, F forward, G derivative) {
  require(x.defined(), std::string(op_name(kind)) + ": undefined input");
  Tensor<T> out = empty_like_shape<T>(x.shape());
  const T* xs = x.data().data();
  T* ys = out.data().data();
  const std::size_t n = out.data().size();
  for (std::size_t i = 0; i < n; ++i) ys[i] = forward(xs[i]);
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, kind, {x}, [xi, derivative](TensorImpl<T>& o) {
      T* gx = xi->grad_buffer();
      const std::size_t m = o.data.size();
      for (std::size_t i = 0; i < m; ++i) gx[i] += o.grad[i] * derivative(xi->data[i], o.data[i]);
    });
  }
  return out;
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int padding) {
  require_rank(x, 4, "conv2d", "input");
  require_rank(weight, 4, "conv2d", "weight");
  const int n = static_cast<int>(x.dim(0)), c = static_cast<int>(x.dim(1));
  const int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
  const int o = static_cast<int>(weight.dim(0)), k = static_cast<int>(weight.dim(2));
  if (weight.dim(1) != c) {
    throw ShapeError("conv2d: input channels (dim 1) " + std::to_string(c) + " do not match weight dim 1 " +
                     std::to_string(weight.dim(1)));
  }
  require(weight.dim(3) == k, "conv2d: kernel must be square, got " + to_string(weight.shape()));
  require(padding >= 0, "conv2d: negative padding");
  if (bias.defined()) {
    require(bias.rank() == 1 && bias.dim(0) == o,
            "conv2d: bias dim 0 must equal output channels " + std::to_string(o) + ", got " + to_string(bias.shape()));
  }
  const int ho = h + 2 * padding - k + 1, wo = w + 2 * padding - k + 1;
  if (ho <= 0) throw ShapeError("conv2d: input height (dim 2) too small for kernel");
  if (wo <= 0) throw ShapeError("conv2d: input width (dim 3) too small for kernel");

  const int kdim = c * k * k;
  const std::size_t in_plane = static_cast<std::size_t>(c) * h * w;
  const std::size_t out_plane = static_cast<std::size_t>(o) * ho * wo;
  const bool direct = (k == 1 && padding == 0);

  Tensor<T> out = empty_like_shape<T>({n, o, ho, wo});
  CMapR<T> wmat(weight.data().data(), o, kdim);
  for (int b = 0; b < n; ++b) {
    const T* xb = x.data().data() + b * in_plane;
    const T* cols = xb;
    if (!direct) {
      auto& buf = scratch<T>(0, static_cast<std::size_t>(kdim) * ho * wo);
      im2col(xb, c, h, w, k, padding, ho, wo, buf.data());
      cols = buf.data();
    }
    MapR<T> y(out.data().data() + b * out_plane, o, static_cast<Eigen::Index>(ho) * wo);
    y.noalias() = wmat * CMapR<T>(cols, kdim, static_cast<Eigen::Index>(ho) * wo);
    if (bias.defined()) {
      for (int oc = 0; oc < o; ++oc) y.row(oc).array() += bias.data()[oc];
    }
  }

  if (needs_grad<T>({&x, &weight, &bias})) {
    TensorImpl<T>* xi = x.impl();
    TensorImpl<T>* wi = weight.impl();
    TensorImpl<T>* bi = bias.defined() ? bias.impl() : nullptr;
    std::vector<Tensor<T>> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    record<T>(out, OpKind::Conv2d, std::move(inputs),
              [=](TensorImpl<T>& y) {
                const Eigen::Index hw = static_cast<Eigen::Index>(ho) * wo;
                CMapR<T> wm(wi->data.data(), o, kdim);
                for (int b = 0; b < n; ++b) {
                  CMapR<T> gy(y.grad.data() + b * out_plane, o, hw);
                  const T* xb = xi->data.data() + b * in_plane;
                  if (tracks(wi)) {
                    const T* cols = xb;
                    if (!direct) {
                      auto& buf = scratch<T>(0, static_cast<std::size_t>(kdim) * hw);
                      im2col(xb, c, h, w, k, padding, ho, wo, buf.data());
                      cols = buf.data();
                    }
                    MapR<T> gw(wi->grad_buffer(), o, kdim);
                    gw.noalias() += gy * CMapR<T>(cols, kdim, hw).transpose();
                  }
                  if (tracks(bi)) {
                    T* gb = bi->grad_buffer();
                    for (int oc = 0; oc < o; ++oc) {
                      const T* row = gy.data() + static_cast<std::int64_t>(oc) * hw;
                      gb[oc] += static_cast<T>(lane_sum(hw, [&](std::int64_t i) { return static_cast<double>(row[i]); }));
                    }
                  }
                  if (tracks(xi)) {
                    T* gx = xi->grad_buffer() + b * in_plane;
                    if (direct) {
                      MapR<T>(gx, c, hw).noalias() += wm.transpose() * gy;
                    } else {
                      auto& dcols = scratch<T>(1, static_cast<std::size_t>(kdim) * hw);
                      MapR<T>(dcols.data(), kdim, hw).noalias() = wm.transpose() * gy;
                      col2im_add(dcols.data(), c, h, w, k, padding, ho, wo, gx);
                    }
                  }
                }
              });
  }
  return out;
}

template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T> running_mean,
                     Tensor<T> running_var, const BatchNormOptions& options) {
  require(x.defined() && x.rank() >= 2, "batchnorm: input must have rank >= 2");
  const std::int64_t channels = x.dim(1);
  for (const Tensor<T>* p : {&gamma, &beta, static_cast<const Tensor<T>*>(&running_mean), static_cast<const Tensor<T>*>(&running_var)}) {
    require(p->defined() && p->rank() == 1 && p->dim(0) == channels,
            "batchnorm: per-channel tensors must have dim 0 = " + std::to_string(channels));
  }
  const std::int64_t n = x.dim(0);
  std::int64_t inner = 1;
  for (int d = 2; d < x.rank(); ++d) inner *= x.dim(d);
  const std::int64_t count = n * inner;
  require(count > 0, "batchnorm: empty input");

  Tensor<T> out = empty_like_shape<T>(x.shape());
  std::vector<T> mean_c(channels);
  std::vector<T> invstd(channels);
  const T* xs = x.data().data();
  const T eps = static_cast<T>(options.epsilon);

  using Vec = Eigen::Array<T, Eigen::Dynamic, 1>;
  using CPlane = Eigen::Map<const Vec>;
  using Plane = Eigen::Map<Vec>;
  for (std::int64_t ch = 0; ch < channels; ++ch) {
    T mu, var;
    if (options.training) {
      // One pass of per-plane sums in double: the shift by the first plane's
      // leading value keeps the sum-of-squares form well conditioned.
      const double shift = xs[ch * inner];
      double s = 0, s2 = 0;
      for (std::int64_t b = 0; b < n; ++b) {
        const T* p = xs + (b * channels + ch) * inner;
        s += lane_sum(inner, [&](std::int64_t i) { return static_cast<double>(p[i]) - shift; });
        s2 += lane_sum(inner, [&](std::int64_t i) {
          const double d = static_cast<double>(p[i]) - shift;
          return d * d;
        });
      }
      const double dm = s / count;
      const double m = shift + dm;
      const double ss = std::max(0.0, s2 - s * dm);
      mu = static_cast<T>(m);
      var = static_cast<T>(ss / count);
      const double unbiased = count > 1 ? ss / (count - 1) : ss;
      const double mom = options.momentum;
      running_mean.data()[ch] = static_cast<T>(mom * running_mean.data()[ch] + (1 - mom) * m);
      running_var.data()[ch] = static_cast<T>(mom * running_var.data()[ch] + (1 - mom) * unbiased);
    } else {
      mu = running_mean.data()[ch];
      var = running_var.data()[ch];
    }
    const T is = T(1) / std::sqrt(var + eps);
    mean_c[ch] = mu;
    invstd[ch] = is;
    const T scale_c = gamma.data()[ch] * is;
    const T shift_c = beta.data()[ch] - mu * scale_c;
    for (std::int64_t b = 0; b < n; ++b) {
      const std::int64_t off = (b * channels + ch) * inner;
      Plane(out.data().data() + off, inner) = CPlane(xs + off, inner) * scale_c + shift_c;
    }
  }

  if (needs_grad<T>({&x, &gamma, &beta})) {
    TensorImpl<T>* xi = x.impl();
    TensorImpl<T>* gi = gamma.impl();
    TensorImpl<T>* bi = beta.impl();
    const bool training = options.training;
    record<T>(out, OpKind::BatchNorm, {x, gamma, beta},
              [=, mean_c = std::move(mean_c), invstd = std::move(invstd)](TensorImpl<T>& y) {
                using Vec = Eigen::Array<T, Eigen::Dynamic, 1>;
                using CPlane = Eigen::Map<const Vec>;
                using Plane = Eigen::Map<Vec>;
                const T* gy = y.grad.data();
                for (std::int64_t ch = 0; ch < channels; ++ch) {
                  // xhat is recomputed from the input instead of being stored.
                  const T mu = mean_c[ch], is = invstd[ch];
                  const T* xs = xi->data.data();
                  double sg = 0, sgx = 0;
                  for (std::int64_t b = 0; b < n; ++b) {
                    const std::int64_t off = (b * channels + ch) * inner;
                    const T* g = gy + off;
                    const T* xp = xs + off;
                    sg += lane_sum(inner, [&](std::int64_t i) { return static_cast<double>(g[i]); });
                    sgx += lane_sum(inner, [&](std::int64_t i) {
                      return static_cast<double>(g[i] * ((xp[i] - mu) * is));
                    });
                  }
                  if (tracks(gi)) gi->grad_buffer()[ch] += static_cast<T>(sgx);
                  if (tracks(bi)) bi->grad_buffer()[ch] += static_cast<T>(sg);
                  if (!tracks(xi)) continue;
                  T* gx = xi->grad_buffer();
                  const T scale_c = gi->data[ch] * invstd[ch];
                  const T mg = training ? static_cast<T>(sg / count) : T(0);
                  const T mgx = training ? static_cast<T>(sgx / count) : T(0);
                  for (std::int64_t b = 0; b < n; ++b) {
                    const std::int64_t off = (b * channels + ch) * inner;
                    Plane dst(gx + off, inner);
                    if (training) {
                      dst += scale_c * (CPlane(gy + off, inner) - mg - ((CPlane(xs + off, inner) - mu) * is) * mgx);
                    } else {
                      dst += scale_c * CPlane(gy + off, inner);
                    }
                  }
                }
              });
  }
  return out;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  // Written so NaN passes through instead of being clipped to zero.
  return unary<T>(
      x, OpKind::Relu, [](T v) { return v < T(0) ? T(0) : v; }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Tensor<T> hinge(const Tensor<T>& x) {
  return unary<T>(
      x, OpKind::Hinge, [](T v) { return v < T(0) ? T(0) : v; }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Tensor<T> max_pool2x2(const Tensor<T>& x) {
  require_rank(x, 4, "maxpool2x2", "input");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0) throw ShapeError("maxpool2x2: height (dim 2) must be even, got " + std::to_string(h));
  if (w % 2 != 0) throw ShapeError("maxpool2x2: width (dim 3) must be even, got " + std::to_string(w));
  const std::int64_t ho = h / 2, wo = w / 2;
  Tensor<T> out = empty_like_shape<T>({n, c, ho, wo});
  const bool grad = needs_grad<T>({&x});
  std::vector<std::int32_t> argmax(grad ? out.data().size() : 0);
  const T* xs = x.data().data();
  T* ys = out.data().data();
  for (std::int64_t p = 0; p < n * c; ++p) {
    const T* plane = xs + p * h * w;
    for (std::int64_t oy = 0; oy < ho; ++oy) {
      for (std::int64_t ox = 0; ox < wo; ++ox) {
        std::int64_t best = (2 * oy) * w + 2 * ox;
        for (std::int64_t candidate : {best + 1, best + w, best + w + 1}) {
          if (plane[candidate] > plane[best] || std::isnan(plane[candidate])) best = candidate;
        }
        const std::int64_t oi = p * ho * wo + oy * wo + ox;
        ys[oi] = plane[best];
        if (grad) argmax[oi] = static_cast<std::int32_t>(best);
      }
    }
  }
  if (grad) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::MaxPool2x2, {x}, [=, argmax = std::move(argmax)](TensorImpl<T>& y) {
      T* gx = xi->grad_buffer();
      const std::int64_t out_plane = ho * wo;
      for (std::int64_t p = 0; p < n * c; ++p) {
        for (std::int64_t i = 0; i < out_plane; ++i) {
          const std::int64_t oi = p * out_plane + i;
          gx[p * h * w + argmax[oi]] += y.grad[oi];
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(x, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  const std::int64_t n = x.dim(0), k = x.dim(1), m = weight.dim(0);
  if (weight.dim(1) != k) {
    throw ShapeError("linear: input dim 1 (" + std::to_string(k) + ") does not match weight dim 1 (" +
                     std::to_string(weight.dim(1)) + ")");
  }
  if (bias.defined()) {
    require(bias.rank() == 1 && bias.dim(0) == m, "linear: bias dim 0 must equal weight dim 0");
  }
  Tensor<T> out = empty_like_shape<T>({n, m});
  MapR<T> y(out.data().data(), n, m);
  y.noalias() = CMapR<T>(x.data().data(), n, k) * CMapR<T>(weight.data().data(), m, k).transpose();
  if (bias.defined()) {
    for (std::int64_t r = 0; r < n; ++r) {
      for (std::int64_t j = 0; j < m; ++j) y(r, j) += bias.data()[j];
    }
  }
  if (needs_grad<T>({&x, &weight, &bias})) {
    TensorImpl<T>* xi = x.impl();
    TensorImpl<T>* wi = weight.impl();
    TensorImpl<T>* bi = bias.defined() ? bias.impl() : nullptr;
    std::vector<Tensor<T>> inputs{x, weight};
    if (bias.defined()) inputs.push_back(bias);
    record<T>(out, OpKind::Linear, std::move(inputs), [=](TensorImpl<T>& yo) {
      CMapR<T> gy(yo.grad.data(), n, m);
      if (tracks(xi)) MapR<T>(xi->grad_buffer(), n, k).noalias() += gy * CMapR<T>(wi->data.data(), m, k);
      if (tracks(wi)) MapR<T>(wi->grad_buffer(), m, k).noalias() += gy.transpose() * CMapR<T>(xi->data.data(), n, k);
      if (tracks(bi)) {
        T* gb = bi->grad_buffer();
        for (std::int64_t j = 0; j < m; ++j) {
          gb[j] += static_cast<T>(lane_sum(n, [&](std::int64_t i) { return static_cast<double>(gy(i, j)); }));
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  require(x.defined(), "softmax: undefined input");
  axis = normalize_axis(axis, x.rank(), "softmax");
  const AxisSplit s = split_axis(x.shape(), axis);
  Tensor<T> out = empty_like_shape<T>(x.shape());
  const T* xs = x.data().data();
  T* ys = out.data().data();
  for (std::int64_t o = 0; o < s.outer; ++o) {
    for (std::int64_t i = 0; i < s.inner; ++i) {
      const std::int64_t base = o * s.dim * s.inner + i;
      T mx = xs[base];
      for (std::int64_t d = 1; d < s.dim; ++d) mx = std::max(mx, xs[base + d * s.inner]);
      T total = 0;
      for (std::int64_t d = 0; d < s.dim; ++d) {
        const T e = std::exp(xs[base + d * s.inner] - mx);
        ys[base + d * s.inner] = e;
        total += e;
      }
      const T inv = T(1) / total;
      for (std::int64_t d = 0; d < s.dim; ++d) ys[base + d * s.inner] *= inv;
    }
  }
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::Softmax, {x}, [=](TensorImpl<T>& y) {
      T* gx = xi->grad_buffer();
      for (std::int64_t o = 0; o < s.outer; ++o) {
        for (std::int64_t i = 0; i < s.inner; ++i) {
          const std::int64_t base = o * s.dim * s.inner + i;
          T dotgy = 0;
          for (std::int64_t d = 0; d < s.dim; ++d) dotgy += y.grad[base + d * s.inner] * y.data[base + d * s.inner];
          for (std::int64_t d = 0; d < s.dim; ++d) {
            const std::int64_t j = base + d * s.inner;
            gx[j] += y.data[j] * (y.grad[j] - dotgy);
          }
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> log(const Tensor<T>& x, double floor) {
  const T f = static_cast<T>(floor);
  if (floor > 0) {
    return unary<T>(
        x, OpKind::Log, [f](T v) { return std::log(std::max(v, f)); },
        [f](T v, T) { return v > f ? T(1) / v : T(0); });
  }
  return unary<T>(
      x, OpKind::Log, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <class T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary<T>(
      x, OpKind::Exp, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = empty_like_shape<T>(a.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (needs_grad<T>({&a, &b})) {
    TensorImpl<T>* ai = a.impl();
    TensorImpl<T>* bi = b.impl();
    record<T>(out, OpKind::Add, {a, b}, [=](TensorImpl<T>& y) {
      for (TensorImpl<T>* in : {ai, bi}) {
        if (!tracks(in)) continue;
        T* g = in->grad_buffer();
        for (std::size_t i = 0; i < y.grad.size(); ++i) g[i] += y.grad[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out = empty_like_shape<T>(a.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (needs_grad<T>({&a, &b})) {
    TensorImpl<T>* ai = a.impl();
    TensorImpl<T>* bi = b.impl();
    record<T>(out, OpKind::Sub, {a, b}, [=](TensorImpl<T>& y) {
      if (tracks(ai)) {
        T* g = ai->grad_buffer();
        for (std::size_t i = 0; i < y.grad.size(); ++i) g[i] += y.grad[i];
      }
      if (tracks(bi)) {
        T* g = bi->grad_buffer();
        for (std::size_t i = 0; i < y.grad.size(); ++i) g[i] -= y.grad[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out = empty_like_shape<T>(a.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (needs_grad<T>({&a, &b})) {
    TensorImpl<T>* ai = a.impl();
    TensorImpl<T>* bi = b.impl();
    record<T>(out, OpKind::Mul, {a, b}, [=](TensorImpl<T>& y) {
      if (tracks(ai)) {
        T* g = ai->grad_buffer();
        for (std::size_t i = 0; i < y.grad.size(); ++i) g[i] += y.grad[i] * bi->data[i];
      }
      if (tracks(bi)) {
        T* g = bi->grad_buffer();
        for (std::size_t i = 0; i < y.grad.size(); ++i) g[i] += y.grad[i] * ai->data[i];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, double factor) {
  const T f = static_cast<T>(factor);
  return unary<T>(
      x, OpKind::Scale, [f](T v) { return v * f; }, [f](T, T) { return f; });
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& x, double offset) {
  const T f = static_cast<T>(offset);
  return unary<T>(
      x, OpKind::AddScalar, [f](T v) { return v + f; }, [](T, T) { return T(1); });
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
  require(x.defined(), "sum: undefined input");
  double total = 0;
  for (T v : x.data()) total += v;
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total));
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::Sum, {x}, [xi](TensorImpl<T>& y) {
      T* g = xi->grad_buffer();
      const T gy = y.grad[0];
      for (std::size_t i = 0; i < xi->data.size(); ++i) g[i] += gy;
    });
  }
  return out;
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
  require(x.defined() && x.numel() > 0, "mean: empty input");
  double total = 0;
  for (T v : x.data()) total += v;
  const double count = static_cast<double>(x.numel());
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(total / count));
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::Mean, {x}, [xi, count](TensorImpl<T>& y) {
      T* g = xi->grad_buffer();
      const T gy = static_cast<T>(y.grad[0] / count);
      for (std::size_t i = 0; i < xi->data.size(); ++i) g[i] += gy;
    });
  }
  return out;
}

template <class T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "dot", "a");
  require_same_shape(a, b, "dot");
  const std::int64_t p = a.dim(0), d = a.dim(1);
  Tensor<T> out = empty_like_shape<T>({p});
  for (std::int64_t r = 0; r < p; ++r) {
    T acc = 0;
    const T* ar = a.data().data() + r * d;
    const T* br = b.data().data() + r * d;
    for (std::int64_t j = 0; j < d; ++j) acc += ar[j] * br[j];
    out.data()[r] = acc;
  }
  if (needs_grad<T>({&a, &b})) {
    TensorImpl<T>* ai = a.impl();
    TensorImpl<T>* bi = b.impl();
    record<T>(out, OpKind::Dot, {a, b}, [=](TensorImpl<T>& y) {
      for (int side = 0; side < 2; ++side) {
        TensorImpl<T>* self = side == 0 ? ai : bi;
        TensorImpl<T>* other = side == 0 ? bi : ai;
        if (!tracks(self)) continue;
        T* g = self->grad_buffer();
        for (std::int64_t r = 0; r < p; ++r) {
          const T gy = y.grad[r];
          for (std::int64_t j = 0; j < d; ++j) g[r * d + j] += gy * other->data[r * d + j];
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> l2_normalize(const Tensor<T>& x, int axis, double eps) {
  require(x.defined(), "l2_normalize: undefined input");
  axis = normalize_axis(axis, x.rank(), "l2_normalize");
  const AxisSplit s = split_axis(x.shape(), axis);
  Tensor<T> out = empty_like_shape<T>(x.shape());
  std::vector<T> norms(s.outer * s.inner);
  const T* xs = x.data().data();
  for (std::int64_t o = 0; o < s.outer; ++o) {
    for (std::int64_t i = 0; i < s.inner; ++i) {
      const std::int64_t base = o * s.dim * s.inner + i;
      double sq = 0;
      for (std::int64_t d = 0; d < s.dim; ++d) sq += static_cast<double>(xs[base + d * s.inner]) * xs[base + d * s.inner];
      const T nrm = static_cast<T>(std::max(std::sqrt(sq), eps));
      norms[o * s.inner + i] = nrm;
      for (std::int64_t d = 0; d < s.dim; ++d) out.data()[base + d * s.inner] = xs[base + d * s.inner] / nrm;
    }
  }
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    const T teps = static_cast<T>(eps);
    record<T>(out, OpKind::L2Normalize, {x}, [=, norms = std::move(norms)](TensorImpl<T>& y) {
      T* gx = xi->grad_buffer();
      for (std::int64_t o = 0; o < s.outer; ++o) {
        for (std::int64_t i = 0; i < s.inner; ++i) {
          const std::int64_t base = o * s.dim * s.inner + i;
          const T nrm = norms[o * s.inner + i];
          if (nrm > teps) {
            T proj = 0;
            for (std::int64_t d = 0; d < s.dim; ++d) proj += y.data[base + d * s.inner] * y.grad[base + d * s.inner];
            for (std::int64_t d = 0; d < s.dim; ++d) {
              const std::int64_t j = base + d * s.inner;
              gx[j] += (y.grad[j] - y.data[j] * proj) / nrm;
            }
          } else {
            for (std::int64_t d = 0; d < s.dim; ++d) gx[base + d * s.inner] += y.grad[base + d * s.inner] / nrm;
          }
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(x.defined(), "reshape: undefined input");
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  Tensor<T> out = Tensor<T>::from(std::move(shape), x.values());
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::Reshape, {x}, [xi](TensorImpl<T>& y) {
      T* g = xi->grad_buffer();
      for (std::size_t i = 0; i < y.grad.size(); ++i) g[i] += y.grad[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> to_channels_last(const Tensor<T>& x) {
  require_rank(x, 4, "to_channels_last", "input");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t hw = h * w;
  Tensor<T> out = empty_like_shape<T>({n, h, w, c});
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* src = x.data().data() + (b * c + ch) * hw;
      T* dst = out.data().data() + b * hw * c + ch;
      for (std::int64_t i = 0; i < hw; ++i) dst[i * c] = src[i];
    }
  }
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::ToChannelsLast, {x}, [=](TensorImpl<T>& y) {
      T* g = xi->grad_buffer();
      for (std::int64_t b = 0; b < n; ++b) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
          T* dst = g + (b * c + ch) * hw;
          const T* src = y.grad.data() + b * hw * c + ch;
          for (std::int64_t i = 0; i < hw; ++i) dst[i] += src[i * c];
        }
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::vector<std::int64_t> indices) {
  require_rank(x, 2, "gather_rows", "input");
  const std::int64_t rows = x.dim(0), d = x.dim(1);
  const std::int64_t p = static_cast<std::int64_t>(indices.size());
  for (std::int64_t r : indices) {
    if (r < 0 || r >= rows) {
      throw ShapeError("gather_rows: index " + std::to_string(r) + " out of range for dim 0 = " + std::to_string(rows));
    }
  }
  Tensor<T> out = empty_like_shape<T>({p, d});
  for (std::int64_t i = 0; i < p; ++i) {
    std::copy_n(x.data().data() + indices[i] * d, d, out.data().data() + i * d);
  }
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::GatherRows, {x}, [=, indices = std::move(indices)](TensorImpl<T>& y) {
      T* g = xi->grad_buffer();
      for (std::int64_t i = 0; i < p; ++i) {
        T* dst = g + indices[i] * d;
        const T* src = y.grad.data() + i * d;
        for (std::int64_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> slice_batch(const Tensor<T>& x, std::int64_t begin, std::int64_t end) {
  require(x.defined() && x.rank() >= 1, "slice_batch: input must have rank >= 1");
  if (begin < 0 || end > x.dim(0) || begin >= end) {
    throw ShapeError("slice_batch: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for dim 0 = " + std::to_string(x.dim(0)));
  }
  const std::int64_t item = x.numel() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = end - begin;
  std::vector<T> values(x.data().begin() + begin * item, x.data().begin() + end * item);
  Tensor<T> out = Tensor<T>::from(std::move(shape), std::move(values));
  if (needs_grad<T>({&x})) {
    TensorImpl<T>* xi = x.impl();
    record<T>(out, OpKind::SliceBatch, {x}, [=](TensorImpl<T>& y) {
      T* g = xi->grad_buffer() + begin * item;
      for (std::size_t i = 0; i < y.grad.size(); ++i) g[i] += y.grad[i];
    });
  }
  return out;
}

template <class T>
Tensor<T> forward_primitive(OpKind kind, std::span<const Tensor<T>> in, const OpAttrs& attrs) {
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (in.size() < lo || in.size() > hi) {
      throw ShapeError(std::string(op_name(kind)) + ": expected " + std::to_string(lo) +
                       (lo == hi ? "" : "-" + std::to_string(hi)) + " inputs, got " + std::to_string(in.size()));
    }
  };
  const Tensor<T> none;
  switch (kind) {
    case OpKind::Conv2d:
      arity(2, 3);
      return conv2d(in[0], in[1], in.size() > 2 ? in[2] : none, attrs.padding);
    case OpKind::BatchNorm:
      arity(5, 5);
      return batch_norm(in[0], in[1], in[2], in[3], in[4], attrs.batch_norm);
    case OpKind::Relu:
      arity(1, 1);
      return relu(in[0]);
    case OpKind::MaxPool2x2:
      arity(1, 1);
      return max_pool2x2(in[0]);
    case OpKind::Linear:
      arity(2, 3);
      return linear(in[0], in[1], in.size() > 2 ? in[2] : none);
    case OpKind::Softmax:
      arity(1, 1);
      return softmax(in[0], attrs.axis);
    case OpKind::Log:
      arity(1, 1);
      return log(in[0], attrs.floor);
    case OpKind::Exp:
      arity(1, 1);
      return exp(in[0]);
    case OpKind::Add:
      arity(2, 2);
      return add(in[0], in[1]);
    case OpKind::Sub:
      arity(2, 2);
      return sub(in[0], in[1]);
    case OpKind::Mul:
      arity(2, 2);
      return mul(in[0], in[1]);
    case OpKind::Scale:
      arity(1, 1);
      return scale(in[0], attrs.scalar);
    case OpKind::AddScalar:
      arity(1, 1);
      return add_scalar(in[0], attrs.scalar);
    case OpKind::Sum:
      arity(1, 1);
      return sum(in[0]);
    case OpKind::Mean:
      arity(1, 1);
      return mean(in[0]);
    case OpKind::Dot:
      arity(2, 2);
      return dot(in[0], in[1]);
    case OpKind::Hinge:
      arity(1, 1);
      return hinge(in[0]);
    case OpKind::L2Normalize:
      arity(1, 1);
      return l2_normalize(in[0], attrs.axis, attrs.epsilon);
    case OpKind::Reshape:
      arity(1, 1);
      return reshape(in[0], attrs.shape);
    case OpKind::ToChannelsLast:
      arity(1, 1);
      return to_channels_last(in[0]);
    case OpKind::GatherRows:
      arity(1, 1);
      return gather_rows(in[0], attrs.indices);
    case OpKind::SliceBatch:
      arity(1, 1);
      return slice_batch(in[0], attrs.begin, attrs.end);
  }
  throw Error("forward_primitive: unknown op kind " + std::to_string(static_cast<int>(kind)));
}

#define SSP_INSTANTIATE_OPS(T)                                                                                     \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);                        \
  template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>, Tensor<T>,    \
                                   const BatchNormOptions&);                                                       \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                                    \
  template Tensor<T> hinge<T>(const Tensor<T>&);                                                                   \
  template Tensor<T> max_pool2x2<T>(const Tensor<T>&);                                                             \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> softmax<T>(const Tensor<T>&, int);                                                            \
  template Tensor<T> log<T>(const Tensor<T>&, double);                                                             \
  template Tensor<T> exp<T>(const Tensor<T>&);                                                                     \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> scale<T>(const Tensor<T>&, double);                                                           \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, double);                                                      \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                                     \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                                    \
  template Tensor<T> dot<T>(const Tensor<T>&, const Tensor<T>&);                                                   \
  template Tensor<T> l2_normalize<T>(const Tensor<T>&, int, double);                                               \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                                          \
  template Tensor<T> to_channels_last<T>(const Tensor<T>&);                                                        \
  template Tensor<T> gather_rows<T>(const Tensor<T>&, std::vector<std::int64_t>);                                  \
  template Tensor<T> slice_batch<T>(const Tensor<T>&, std::int64_t, std::int64_t);                                 \
  template Tensor<T> forward_primitive<T>(OpKind, std::span<const Tensor<T>>, const OpAttrs&);

SSP_INSTANTIATE_OPS(float)
SSP_INSTANTIATE_OPS(double)

}  // namespace ssp::ad
