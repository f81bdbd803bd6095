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

// Two-stream multi-scale detector: a backbone with three feature taps, a
// semantic (mask) head and a noise head per tap, spatial attention of the
// deepest fused features by the deepest predicted mask, and a classifier.

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "telltale/nn/layers.hpp"
#include "telltale/tensor.hpp"

namespace telltale::net {

struct ModelConfig {
  int num_classes = 2;  // 2 (real/fake) or 5 (real, df, ff, fs, nt)
  int head_channels = 64;
  bool aggregation = false;  // size-align and concatenate all three taps
  std::string backbone = "reference";
  int input_size = 64;
  // Reference backbone widths.
  int stem_channels = 16;
  std::array<int, 3> backbone_channels = {32, 64, 128};
  int classifier_hidden = 128;

  // Throws InvalidArgument on inconsistent values.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
using Taps = std::array<Tensor<T>, 3>;

// Adapter for feature extractors. Implementations register their parameters
// in the model's store (group kBackbone) at construction.
template <typename T>
class Backbone {
 public:
  struct State {
    virtual ~State() = default;
  };

  virtual ~Backbone() = default;
  virtual std::array<int, 3> tap_channels() const = 0;
  // Strictly increasing; each tap has ceil(input / stride) rows and columns.
  virtual std::array<int, 3> tap_strides() const = 0;
  virtual Taps<T> forward(const nn::ParameterStore<T>& store, const Tensor<T>& input,
                          std::unique_ptr<State>& state) const = 0;
  virtual void backward(const nn::ParameterStore<T>& store, const State& state,
                        const Taps<T>& grad_taps, std::span<T> grads) const = 0;
};

// Three stride-2 stages after a stride-2 stem: taps at strides 4/8/16.
template <typename T>
class ReferenceBackbone final : public Backbone<T> {
 public:
  ReferenceBackbone(nn::ParameterStore<T>& store, const ModelConfig& cfg);

  std::array<int, 3> tap_channels() const override { return channels_; }
  std::array<int, 3> tap_strides() const override { return {4, 8, 16}; }
  Taps<T> forward(const nn::ParameterStore<T>& store, const Tensor<T>& input,
                  std::unique_ptr<typename Backbone<T>::State>& state) const override;
  void backward(const nn::ParameterStore<T>& store, const typename Backbone<T>::State& state,
                const Taps<T>& grad_taps, std::span<T> grads) const override;

 private:
  struct StageState;
  std::array<int, 3> channels_;
  nn::Conv2d<T> stem_;
  std::array<nn::Conv2d<T>, 3> down_;
  std::array<nn::Conv2d<T>, 3> refine_;
};

template <typename T>
using BackboneFactory =
    std::function<std::unique_ptr<Backbone<T>>(nn::ParameterStore<T>&, const ModelConfig&)>;

// Two depthwise-separable 3x3 layers (ReLU) give a C-channel feature; a 1x1
// projection gives the map: 1 channel + sigmoid (semantic) or 3 linear
// channels (noise).
template <typename T>
class PredictionHead {
 public:
  struct Cache {
    Tensor<T> input, dw1, act1, dw2, feature, map;
    typename nn::Conv2d<T>::Cache pw1, pw2, proj;
  };

  PredictionHead() = default;
  PredictionHead(nn::ParameterStore<T>& store, const std::string& name, int in_channels,
                 int channels, int map_channels, bool sigmoid_map, nn::Group group);

  void forward(const nn::ParameterStore<T>& store, const Tensor<T>& x, Cache& cache) const;
  // `grad_map` is w.r.t. the head's output map (post-sigmoid for semantic
  // heads); either gradient may be empty.
  Tensor<T> backward(const nn::ParameterStore<T>& store, const Cache& cache,
                     const Tensor<T>& grad_feature, const Tensor<T>& grad_map,
                     std::span<T> grads) const;

 private:
  bool sigmoid_map_ = false;
  nn::DepthwiseConv3<T> dw1_, dw2_;
  nn::Conv2d<T> pw1_, pw2_, proj_;
};

// Halves the spatial size `halvings` times, alternating stride-2 3x3
// convolution (+ReLU) and 2x2 average pooling, starting with convolution.
template <typename T>
class SizeAlignBlock {
 public:
  struct Cache {
    std::vector<Tensor<T>> outputs;
    std::vector<typename nn::Conv2d<T>::Cache> convs;
  };

  SizeAlignBlock() = default;
  SizeAlignBlock(nn::ParameterStore<T>& store, const std::string& name, int channels,
                 int halvings, nn::Group group);

  Tensor<T> forward(const nn::ParameterStore<T>& store, const Tensor<T>& x, Cache& cache) const;
  Tensor<T> backward(const nn::ParameterStore<T>& store, const Cache& cache, const Tensor<T>& dy,
                     std::span<T> grads) const;
  int halvings() const { return halvings_; }

 private:
  int halvings_ = 0;
  std::vector<nn::Conv2d<T>> convs_;
};

// Channel concatenation.
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts);

// Broadcast-multiplies every channel of `features` by the single-channel
// `mask`. Throws InvalidArgument on spatial mismatch.
template <typename T>
Tensor<T> spatial_attend(const Tensor<T>& features, const Tensor<T>& mask);

// concat(semantic, noise) * mask.
template <typename T>
Tensor<T> attention_fuse(const Tensor<T>& semantic_feature, const Tensor<T>& noise_feature,
                         const Tensor<T>& mask);

template <typename T>
std::vector<T> softmax(std::span<const T> logits);

struct ForwardOptions {
  // Off during the first training step: noise heads are skipped and their
  // features enter the fusion as zeros.
  bool noise_stream = true;
};

template <typename T>
class Model {
 public:
  struct Cache;

  struct Output {
    Taps<T> taps;
    std::array<Tensor<T>, 3> seg_maps;    // 1 x h_j x w_j, values in (0, 1)
    std::array<Tensor<T>, 3> noise_maps;  // 3 x h_j x w_j; empty without noise stream
    std::array<Tensor<T>, 3> semantic_features;
    std::array<Tensor<T>, 3> noise_features;
    Tensor<T> attention;  // map used for spatial attention
    Tensor<T> attended;
    std::vector<T> logits;
    std::vector<T> probs;
    std::shared_ptr<Cache> cache;
  };

  // Gradients of a scalar loss w.r.t. the outputs; empty entries are zero.
  struct OutputGrads {
    std::array<Tensor<T>, 3> seg_maps;
    std::array<Tensor<T>, 3> noise_maps;
    std::vector<T> logits;
  };

  explicit Model(const ModelConfig& cfg, BackboneFactory<T> factory = {});
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore<T>& parameters() { return store_; }
  const nn::ParameterStore<T>& parameters() const { return store_; }
  void initialize(uint64_t seed) { store_.initialize(seed); }
  std::array<int, 3> strides() const { return backbone_->tap_strides(); }
  // Width of the attended feature fed to the classifier.
  int fused_channels() const;
  // Map size at tap j for an input of the given size.
  std::array<int, 2> map_size(int tap, int input_h, int input_w) const;

  // `attention_override`, when given, replaces the deepest predicted mask in
  // the attention (no gradient reaches the semantic head through it).
  Output forward(const Tensor<T>& input, const ForwardOptions& options = {},
                 const Tensor<T>* attention_override = nullptr) const;
  void backward(const Output& output, const OutputGrads& grads, std::span<T> param_grads) const;

  // The aggregation-mode fusion on already computed head features.
  Tensor<T> aggregate_features(const std::array<Tensor<T>, 3>& semantic_features,
                               const std::array<Tensor<T>, 3>& noise_features,
                               const Tensor<T>& mask3) const;

  // Classifier on an attended feature (pooled, hidden, logits).
  std::vector<T> classify(const Tensor<T>& attended) const;

 private:
  ModelConfig cfg_;
  nn::ParameterStore<T> store_;
  std::unique_ptr<Backbone<T>> backbone_;
  std::array<PredictionHead<T>, 3> semantic_heads_;
  std::array<PredictionHead<T>, 3> noise_heads_;
  std::array<SizeAlignBlock<T>, 2> semantic_align_;
  std::array<SizeAlignBlock<T>, 2> noise_align_;
  nn::Linear<T> hidden_;
  nn::Linear<T> output_;
};

}  // namespace telltale::net
