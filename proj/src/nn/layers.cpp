/*
 * Copyright 2026 The Telltale Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "telltale/nn/layers.hpp"

#include <cmath>
#include <random>

#include <Eigen/Core>

#include "telltale/error.hpp"

namespace telltale::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

uint64_t fnv1a(const std::string& text) {
  uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace

const char* group_name(Group group) {
  switch (group) {
    case Group::kBackbone: return "backbone";
    case Group::kSemanticHead: return "semantic_head";
    case Group::kNoiseHead: return "noise_head";
    case Group::kSemanticAlign: return "semantic_align";
    case Group::kNoiseAlign: return "noise_align";
    case Group::kClassifier: return "classifier";
  }
  return "unknown";
}

template <typename T>
size_t ParameterStore<T>::add(std::string name, std::vector<int> shape, Group group, Init init,
                              int fan_in) {
  for (const auto& s : slots_) {
    if (s.name == name) throw InvalidArgument("duplicate parameter name " + name);
  }
  size_t count = 1;
  for (int d : shape) count *= static_cast<size_t>(d);
  Slot slot{std::move(name), std::move(shape), values_.size(), count, group, init, fan_in};
  values_.resize(values_.size() + count, T{0});
  slots_.push_back(std::move(slot));
  return slots_.size() - 1;
}

template <typename T>
void ParameterStore<T>::initialize(uint64_t seed) {
  for (size_t i = 0; i < slots_.size(); ++i) {
    const Slot& slot = slots_[i];
    const uint64_t h = fnv1a(slot.name);
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(h), static_cast<uint32_t>(h >> 32)};
    std::mt19937_64 rng(seq);
    double stddev = 0.0;
    switch (slot.init) {
      case Init::kHe: stddev = std::sqrt(2.0 / slot.fan_in); break;
      case Init::kXavier: stddev = std::sqrt(1.0 / slot.fan_in); break;
      case Init::kSmall: stddev = 0.01; break;
      case Init::kZero: stddev = 0.0; break;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    auto values = view(i);
    for (T& v : values) v = stddev == 0.0 ? T{0} : static_cast<T>(stddev * normal(rng));
  }
}

template <typename T>
size_t ParameterStore<T>::find(const std::string& name) const {
  for (size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].name == name) return i;
  }
  throw InvalidArgument("no parameter named " + name);
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(ParameterStore<T>& store, const std::string& name, const ConvSpec& spec,
                  Group group, Init init)
    : spec_(spec) {
  const int fan_in = spec.in_channels * spec.kernel * spec.kernel;
  weight_ = store.add(name + ".weight", {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel},
                      group, init, fan_in);
  bias_ = store.add(name + ".bias", {spec.out_channels}, group, Init::kZero, fan_in);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const ParameterStore<T>& store, const Tensor<T>& x,
                             Cache& cache) const {
  if (x.channels() != spec_.in_channels) {
    throw InvalidArgument("Conv2d: expected " + std::to_string(spec_.in_channels) +
                          " input channels, got " + std::to_string(x.channels()));
  }
  const int k = spec_.kernel, s = spec_.stride, p = spec_.pad;
  const int oh = out_size(x.height()), ow = out_size(x.width());
  const int rows = spec_.in_channels * k * k;
  const int cols = oh * ow;
  cache.in_h = x.height();
  cache.in_w = x.width();
  if (k == 1 && s == 1 && p == 0) {
    cache.columns = ConstMatrixMap<T>(x.ptr(), rows, cols);
  } else {
    cache.columns.setZero(rows, cols);
    for (int c = 0; c < spec_.in_channels; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          T* row = cache.columns.data() + static_cast<size_t>((c * k + ky) * k + kx) * cols;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s - p + ky;
            if (iy < 0 || iy >= x.height()) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s - p + kx;
              if (ix >= 0 && ix < x.width()) row[oy * ow + ox] = x.at(c, iy, ix);
            }
          }
        }
      }
    }
  }
  // Products run on aligned copies only (see Cache::columns).
  const RowMatrix<T> w = ConstMatrixMap<T>(store.view(weight_).data(), spec_.out_channels, rows);
  RowMatrix<T> out = w * cache.columns;
  auto bias = store.view(bias_);
  for (int o = 0; o < spec_.out_channels; ++o) out.row(o).array() += bias[o];
  Tensor<T> y(spec_.out_channels, oh, ow);
  std::copy(out.data(), out.data() + out.size(), y.ptr());
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const ParameterStore<T>& store, const Cache& cache,
                              const Tensor<T>& dy, std::span<T> grads,
                              bool need_input_grad) const {
  const int k = spec_.kernel, s = spec_.stride, p = spec_.pad;
  const int oh = dy.height(), ow = dy.width();
  const int rows = spec_.in_channels * k * k;
  const int cols = oh * ow;
  const RowMatrix<T> grad_out = ConstMatrixMap<T>(dy.ptr(), spec_.out_channels, cols);
  const Slot& ws = store.slot(weight_);
  const Slot& bs = store.slot(bias_);
  const RowMatrix<T> dw = grad_out * cache.columns.transpose();
  T* gw = grads.data() + ws.offset;
  for (Eigen::Index i = 0; i < dw.size(); ++i) gw[i] += dw.data()[i];
  for (int o = 0; o < spec_.out_channels; ++o) grads[bs.offset + o] += grad_out.row(o).sum();
  if (!need_input_grad) return {};

  const RowMatrix<T> w = ConstMatrixMap<T>(store.view(weight_).data(), spec_.out_channels, rows);
  Tensor<T> dx(spec_.in_channels, cache.in_h, cache.in_w);
  RowMatrix<T> dcol = w.transpose() * grad_out;
  if (k == 1 && s == 1 && p == 0) {
    std::copy(dcol.data(), dcol.data() + dcol.size(), dx.ptr());
    return dx;
  }
  for (int c = 0; c < spec_.in_channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = dcol.data() + static_cast<size_t>((c * k + ky) * k + kx) * cols;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s - p + ky;
          if (iy < 0 || iy >= cache.in_h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s - p + kx;
            if (ix >= 0 && ix < cache.in_w) dx.at(c, iy, ix) += row[oy * ow + ox];
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// DepthwiseConv3

template <typename T>
DepthwiseConv3<T>::DepthwiseConv3(ParameterStore<T>& store, const std::string& name, int channels,
                                  Group group)
    : channels_(channels) {
  weight_ = store.add(name + ".weight", {channels, 1, 3, 3}, group, Init::kHe, 9);
  bias_ = store.add(name + ".bias", {channels}, group, Init::kZero, 9);
}

template <typename T>
Tensor<T> DepthwiseConv3<T>::forward(const ParameterStore<T>& store, const Tensor<T>& x) const {
  if (x.channels() != channels_) throw InvalidArgument("DepthwiseConv3: channel mismatch");
  const int h = x.height(), w = x.width();
  Tensor<T> y(channels_, h, w);
  auto weight = store.view(weight_);
  auto bias = store.view(bias_);
  for (int c = 0; c < channels_; ++c) {
    const T* k = weight.data() + c * 9;
    for (int oy = 0; oy < h; ++oy) {
      for (int ox = 0; ox < w; ++ox) {
        T acc = bias[c];
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox + kx - 1;
            if (ix >= 0 && ix < w) acc += k[ky * 3 + kx] * x.at(c, iy, ix);
          }
        }
        y.at(c, oy, ox) = acc;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> DepthwiseConv3<T>::backward(const ParameterStore<T>& store, const Tensor<T>& x,
                                      const Tensor<T>& dy, std::span<T> grads) const {
  const int h = x.height(), w = x.width();
  Tensor<T> dx(channels_, h, w);
  auto weight = store.view(weight_);
  T* dweight = grads.data() + store.slot(weight_).offset;
  T* dbias = grads.data() + store.slot(bias_).offset;
  for (int c = 0; c < channels_; ++c) {
    const T* k = weight.data() + c * 9;
    T* dk = dweight + c * 9;
    T db = 0;
    for (int oy = 0; oy < h; ++oy) {
      for (int ox = 0; ox < w; ++ox) {
        const T g = dy.at(c, oy, ox);
        db += g;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = ox + kx - 1;
            if (ix < 0 || ix >= w) continue;
            dk[ky * 3 + kx] += g * x.at(c, iy, ix);
            dx.at(c, iy, ix) += g * k[ky * 3 + kx];
          }
        }
      }
    }
    dbias[c] += db;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, int in, int out, Group group,
                  Init init)
    : in_(in), out_(out) {
  weight_ = store.add(name + ".weight", {out, in}, group, init, in);
  bias_ = store.add(name + ".bias", {out}, group, Init::kZero, in);
}

template <typename T>
std::vector<T> Linear<T>::forward(const ParameterStore<T>& store, std::span<const T> x) const {
  if (static_cast<int>(x.size()) != in_) throw InvalidArgument("Linear: input size mismatch");
  auto w = store.view(weight_);
  auto b = store.view(bias_);
  std::vector<T> y(out_);
  for (int o = 0; o < out_; ++o) {
    T acc = b[o];
    const T* row = w.data() + static_cast<size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
  return y;
}

template <typename T>
std::vector<T> Linear<T>::backward(const ParameterStore<T>& store, std::span<const T> x,
                                   std::span<const T> dy, std::span<T> grads) const {
  auto w = store.view(weight_);
  T* dw = grads.data() + store.slot(weight_).offset;
  T* db = grads.data() + store.slot(bias_).offset;
  std::vector<T> dx(in_, T{0});
  for (int o = 0; o < out_; ++o) {
    const T g = dy[o];
    db[o] += g;
    const T* row = w.data() + static_cast<size_t>(o) * in_;
    T* drow = dw + static_cast<size_t>(o) * in_;
    for (int i = 0; i < in_; ++i) {
      drow[i] += g * x[i];
      dx[i] += g * row[i];
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Elementwise helpers

template <typename T>
void relu_inplace(Tensor<T>& x) {
  for (T& v : x.data()) v = v > T{0} ? v : T{0};
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& dy, const Tensor<T>& y) {
  Tensor<T> dx(dy.channels(), dy.height(), dy.width());
  for (size_t i = 0; i < dx.size(); ++i) dx[i] = y[i] > T{0} ? dy[i] : T{0};
  return dx;
}

template <typename T>
T sigmoid(T z) {
  if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
  const T e = std::exp(z);
  return e / (T{1} + e);
}

template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) {
    throw InvalidArgument("avg_pool2: spatial dims must be even");
  }
  Tensor<T> y(x.channels(), x.height() / 2, x.width() / 2);
  for (int c = 0; c < x.channels(); ++c) {
    for (int oy = 0; oy < y.height(); ++oy) {
      for (int ox = 0; ox < y.width(); ++ox) {
        y.at(c, oy, ox) = T(0.25) * (x.at(c, 2 * oy, 2 * ox) + x.at(c, 2 * oy, 2 * ox + 1) +
                                     x.at(c, 2 * oy + 1, 2 * ox) + x.at(c, 2 * oy + 1, 2 * ox + 1));
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> avg_pool2_backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.channels(), dy.height() * 2, dy.width() * 2);
  for (int c = 0; c < dx.channels(); ++c) {
    for (int y = 0; y < dx.height(); ++y) {
      for (int x = 0; x < dx.width(); ++x) dx.at(c, y, x) = T(0.25) * dy.at(c, y / 2, x / 2);
    }
  }
  return dx;
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw InvalidArgument("add_inplace: shape mismatch");
  for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

#define TELLTALE_INSTANTIATE_LAYERS(T)                                     \
  template class ParameterStore<T>;                                        \
  template class Conv2d<T>;                                                \
  template class DepthwiseConv3<T>;                                        \
  template class Linear<T>;                                                \
  template void relu_inplace<T>(Tensor<T>&);                               \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&); \
  template T sigmoid<T>(T);                                                \
  template Tensor<T> avg_pool2<T>(const Tensor<T>&);                       \
  template Tensor<T> avg_pool2_backward<T>(const Tensor<T>&);              \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);

TELLTALE_INSTANTIATE_LAYERS(float)
TELLTALE_INSTANTIATE_LAYERS(double)

}  // namespace telltale::nn
