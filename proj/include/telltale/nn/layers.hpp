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

#pragma once

// Minimal layer set with explicit backward passes. Layers hold no
// activations: forward() fills a caller-owned cache and backward()
// accumulates parameter gradients into a caller-owned flat buffer, so one
// set of weights can serve any number of concurrent forward passes.

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Core>
#include <vector>

#include "telltale/tensor.hpp"

namespace telltale::nn {

enum class Group {
  kBackbone,
  kSemanticHead,
  kNoiseHead,
  kSemanticAlign,
  kNoiseAlign,
  kClassifier,
};

const char* group_name(Group group);

enum class Init {
  kHe,      // N(0, 2 / fan_in)
  kXavier,  // N(0, 1 / fan_in)
  kSmall,   // N(0, 0.01^2)
  kZero,
};

struct Slot {
  std::string name;
  std::vector<int> shape;
  size_t offset = 0;
  size_t size = 0;
  Group group = Group::kBackbone;
  Init init = Init::kZero;
  int fan_in = 1;
};

// Flat parameter vector with named slots.
template <typename T>
class ParameterStore {
 public:
  size_t add(std::string name, std::vector<int> shape, Group group, Init init, int fan_in);

  // Every slot is drawn from its own stream seeded by (seed, slot name), so
  // adding or resizing one slot never perturbs the others.
  void initialize(uint64_t seed);

  const std::vector<Slot>& slots() const { return slots_; }
  const Slot& slot(size_t index) const { return slots_[index]; }
  // Index of the named slot; throws InvalidArgument when absent.
  size_t find(const std::string& name) const;

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }
  size_t size() const { return values_.size(); }

  std::span<T> view(size_t index) {
    return std::span<T>(values_).subspan(slots_[index].offset, slots_[index].size);
  }
  std::span<const T> view(size_t index) const {
    return std::span<const T>(values_).subspan(slots_[index].offset, slots_[index].size);
  }

 private:
  std::vector<Slot> slots_;
  std::vector<T> values_;
};

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
};

template <typename T>
class Conv2d {
 public:
  struct Cache {
    int in_h = 0;
    int in_w = 0;
    // (in * k * k) x (out_h * out_w). Eigen-owned so its storage is always
    // aligned: mapped heap buffers of varying alignment change the summation
    // order of the vectorized kernels and break bit-reproducibility.
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> columns;
  };

  Conv2d() = default;
  Conv2d(ParameterStore<T>& store, const std::string& name, const ConvSpec& spec, Group group,
         Init init = Init::kHe);

  int out_size(int in) const { return (in + 2 * spec_.pad - spec_.kernel) / spec_.stride + 1; }
  const ConvSpec& spec() const { return spec_; }
  size_t weight_slot() const { return weight_; }
  size_t bias_slot() const { return bias_; }

  Tensor<T> forward(const ParameterStore<T>& store, const Tensor<T>& x, Cache& cache) const;
  // Accumulates dW, db into `grads`; returns dx unless `need_input_grad` is false.
  Tensor<T> backward(const ParameterStore<T>& store, const Cache& cache, const Tensor<T>& dy,
                     std::span<T> grads, bool need_input_grad = true) const;

 private:
  ConvSpec spec_;
  size_t weight_ = 0;
  size_t bias_ = 0;
};

// 3x3 depthwise convolution, stride 1, zero padding 1.
template <typename T>
class DepthwiseConv3 {
 public:
  DepthwiseConv3() = default;
  DepthwiseConv3(ParameterStore<T>& store, const std::string& name, int channels, Group group);

  Tensor<T> forward(const ParameterStore<T>& store, const Tensor<T>& x) const;
  Tensor<T> backward(const ParameterStore<T>& store, const Tensor<T>& x, const Tensor<T>& dy,
                     std::span<T> grads) const;

 private:
  int channels_ = 0;
  size_t weight_ = 0;
  size_t bias_ = 0;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, int in, int out, Group group,
         Init init = Init::kHe);

  std::vector<T> forward(const ParameterStore<T>& store, std::span<const T> x) const;
  std::vector<T> backward(const ParameterStore<T>& store, std::span<const T> x,
                          std::span<const T> dy, std::span<T> grads) const;
  int in() const { return in_; }
  int out() const { return out_; }
  size_t weight_slot() const { return weight_; }
  size_t bias_slot() const { return bias_; }

 private:
  int in_ = 0;
  int out_ = 0;
  size_t weight_ = 0;
  size_t bias_ = 0;
};

template <typename T>
void relu_inplace(Tensor<T>& x);
// dy * [y > 0], where y is the ReLU output.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& dy, const Tensor<T>& y);

template <typename T>
T sigmoid(T z);

// 2x2 average pooling; requires even spatial dims.
template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x);
template <typename T>
Tensor<T> avg_pool2_backward(const Tensor<T>& dy);

// Accumulate b into a (shapes must match).
template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b);

}  // namespace telltale::nn
