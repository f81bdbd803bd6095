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

#include "telltale/net.hpp"

#include <algorithm>
#include <cmath>

#include "telltale/error.hpp"

namespace telltale::net {

using nn::Conv2d;
using nn::ConvSpec;
using nn::Group;
using nn::Init;
using nn::ParameterStore;

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::validate() const {
  if (num_classes != 2 && num_classes != 5) throw InvalidArgument("num_classes must be 2 or 5");
  if (head_channels < 1) throw InvalidArgument("head_channels must be >= 1");
  if (stem_channels < 1 || classifier_hidden < 1) {
    throw InvalidArgument("stem_channels and classifier_hidden must be >= 1");
  }
  for (int c : backbone_channels) {
    if (c < 1) throw InvalidArgument("backbone channels must be >= 1");
  }
  if (input_size < 16 || input_size % 16 != 0) {
    throw InvalidArgument("input_size must be a positive multiple of 16");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"num_classes", num_classes},
          {"head_channels", head_channels},
          {"aggregation", aggregation},
          {"backbone", backbone},
          {"input_size", input_size},
          {"stem_channels", stem_channels},
          {"backbone_channels", backbone_channels},
          {"classifier_hidden", classifier_hidden}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.num_classes = j.at("num_classes").get<int>();
  cfg.head_channels = j.at("head_channels").get<int>();
  cfg.aggregation = j.at("aggregation").get<bool>();
  cfg.backbone = j.at("backbone").get<std::string>();
  cfg.input_size = j.at("input_size").get<int>();
  cfg.stem_channels = j.at("stem_channels").get<int>();
  cfg.backbone_channels = j.at("backbone_channels").get<std::array<int, 3>>();
  cfg.classifier_hidden = j.at("classifier_hidden").get<int>();
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// ReferenceBackbone

template <typename T>
struct ReferenceBackbone<T>::StageState : Backbone<T>::State {
  typename Conv2d<T>::Cache stem_cache;
  Tensor<T> stem_out;
  std::array<typename Conv2d<T>::Cache, 3> down_cache, refine_cache;
  std::array<Tensor<T>, 3> down_out, refine_out;
};

template <typename T>
ReferenceBackbone<T>::ReferenceBackbone(ParameterStore<T>& store, const ModelConfig& cfg)
    : channels_(cfg.backbone_channels) {
  stem_ = Conv2d<T>(store, "backbone.stem", {3, cfg.stem_channels, 3, 2, 1}, Group::kBackbone);
  int in = cfg.stem_channels;
  for (int s = 0; s < 3; ++s) {
    const std::string prefix = "backbone.stage" + std::to_string(s + 1);
    down_[s] = Conv2d<T>(store, prefix + ".down", {in, channels_[s], 3, 2, 1}, Group::kBackbone);
    refine_[s] = Conv2d<T>(store, prefix + ".refine", {channels_[s], channels_[s], 3, 1, 1},
                           Group::kBackbone);
    in = channels_[s];
  }
}

template <typename T>
Taps<T> ReferenceBackbone<T>::forward(const ParameterStore<T>& store, const Tensor<T>& input,
                                      std::unique_ptr<typename Backbone<T>::State>& state) const {
  auto st = std::make_unique<StageState>();
  st->stem_out = stem_.forward(store, input, st->stem_cache);
  nn::relu_inplace(st->stem_out);
  const Tensor<T>* x = &st->stem_out;
  Taps<T> taps;
  for (int s = 0; s < 3; ++s) {
    st->down_out[s] = down_[s].forward(store, *x, st->down_cache[s]);
    nn::relu_inplace(st->down_out[s]);
    st->refine_out[s] = refine_[s].forward(store, st->down_out[s], st->refine_cache[s]);
    nn::relu_inplace(st->refine_out[s]);
    taps[s] = st->refine_out[s];
    x = &st->refine_out[s];
  }
  state = std::move(st);
  return taps;
}

template <typename T>
void ReferenceBackbone<T>::backward(const ParameterStore<T>& store,
                                    const typename Backbone<T>::State& state,
                                    const Taps<T>& grad_taps, std::span<T> grads) const {
  const auto& st = dynamic_cast<const StageState&>(state);
  Tensor<T> carry;  // gradient flowing into the output of stage s from stage s+1
  for (int s = 2; s >= 0; --s) {
    Tensor<T> g = grad_taps[s].empty() ? Tensor<T>(st.refine_out[s].channels(),
                                                   st.refine_out[s].height(),
                                                   st.refine_out[s].width())
                                       : grad_taps[s];
    if (!carry.empty()) nn::add_inplace(g, carry);
    g = nn::relu_backward(g, st.refine_out[s]);
    g = refine_[s].backward(store, st.refine_cache[s], g, grads);
    g = nn::relu_backward(g, st.down_out[s]);
    carry = down_[s].backward(store, st.down_cache[s], g, grads);
  }
  Tensor<T> g = nn::relu_backward(carry, st.stem_out);
  stem_.backward(store, st.stem_cache, g, grads, /*need_input_grad=*/false);
}

// ---------------------------------------------------------------------------
// PredictionHead

template <typename T>
PredictionHead<T>::PredictionHead(ParameterStore<T>& store, const std::string& name,
                                  int in_channels, int channels, int map_channels,
                                  bool sigmoid_map, Group group)
    : sigmoid_map_(sigmoid_map) {
  dw1_ = nn::DepthwiseConv3<T>(store, name + ".sep1.depthwise", in_channels, group);
  pw1_ = Conv2d<T>(store, name + ".sep1.pointwise", {in_channels, channels, 1, 1, 0}, group);
  dw2_ = nn::DepthwiseConv3<T>(store, name + ".sep2.depthwise", channels, group);
  pw2_ = Conv2d<T>(store, name + ".sep2.pointwise", {channels, channels, 1, 1, 0}, group);
  proj_ = Conv2d<T>(store, name + ".proj", {channels, map_channels, 1, 1, 0}, group,
                    Init::kXavier);
}

template <typename T>
void PredictionHead<T>::forward(const ParameterStore<T>& store, const Tensor<T>& x,
                                Cache& cache) const {
  cache.input = x;
  cache.dw1 = dw1_.forward(store, x);
  cache.act1 = pw1_.forward(store, cache.dw1, cache.pw1);
  nn::relu_inplace(cache.act1);
  cache.dw2 = dw2_.forward(store, cache.act1);
  cache.feature = pw2_.forward(store, cache.dw2, cache.pw2);
  nn::relu_inplace(cache.feature);
  cache.map = proj_.forward(store, cache.feature, cache.proj);
  if (sigmoid_map_) {
    for (T& v : cache.map.data()) v = nn::sigmoid(v);
  }
}

template <typename T>
Tensor<T> PredictionHead<T>::backward(const ParameterStore<T>& store, const Cache& cache,
                                      const Tensor<T>& grad_feature, const Tensor<T>& grad_map,
                                      std::span<T> grads) const {
  Tensor<T> g_feature(cache.feature.channels(), cache.feature.height(), cache.feature.width());
  if (!grad_feature.empty()) nn::add_inplace(g_feature, grad_feature);
  if (!grad_map.empty()) {
    Tensor<T> g_logit = grad_map;
    if (sigmoid_map_) {
      for (size_t i = 0; i < g_logit.size(); ++i) {
        const T m = cache.map[i];
        g_logit[i] *= m * (T{1} - m);
      }
    }
    nn::add_inplace(g_feature, proj_.backward(store, cache.proj, g_logit, grads));
  }
  Tensor<T> g = nn::relu_backward(g_feature, cache.feature);
  g = pw2_.backward(store, cache.pw2, g, grads);
  g = dw2_.backward(store, cache.act1, g, grads);
  g = nn::relu_backward(g, cache.act1);
  g = pw1_.backward(store, cache.pw1, g, grads);
  return dw1_.backward(store, cache.input, g, grads);
}

// ---------------------------------------------------------------------------
// SizeAlignBlock

template <typename T>
SizeAlignBlock<T>::SizeAlignBlock(ParameterStore<T>& store, const std::string& name, int channels,
                                  int halvings, Group group)
    : halvings_(halvings) {
  for (int i = 0; i < halvings; i += 2) {
    convs_.emplace_back(store, name + ".conv" + std::to_string(i / 2 + 1),
                        ConvSpec{channels, channels, 3, 2, 1}, group);
  }
}

template <typename T>
Tensor<T> SizeAlignBlock<T>::forward(const ParameterStore<T>& store, const Tensor<T>& x,
                                     Cache& cache) const {
  cache.outputs.clear();
  cache.convs.assign(convs_.size(), {});
  Tensor<T> current = x;
  for (int i = 0; i < halvings_; ++i) {
    if (i % 2 == 0) {
      current = convs_[i / 2].forward(store, current, cache.convs[i / 2]);
      nn::relu_inplace(current);
    } else {
      current = nn::avg_pool2(current);
    }
    cache.outputs.push_back(current);
  }
  return current;
}

template <typename T>
Tensor<T> SizeAlignBlock<T>::backward(const ParameterStore<T>& store, const Cache& cache,
                                      const Tensor<T>& dy, std::span<T> grads) const {
  Tensor<T> g = dy;
  for (int i = halvings_ - 1; i >= 0; --i) {
    if (i % 2 == 0) {
      g = nn::relu_backward(g, cache.outputs[i]);
      g = convs_[i / 2].backward(store, cache.convs[i / 2], g, grads);
    } else {
      g = nn::avg_pool2_backward(g);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Fusion helpers

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw InvalidArgument("concat_channels: no inputs");
  const int h = parts[0].height(), w = parts[0].width();
  int channels = 0;
  for (const auto& p : parts) {
    if (!p.same_spatial(h, w)) throw InvalidArgument("concat_channels: spatial size mismatch");
    channels += p.channels();
  }
  Tensor<T> out(channels, h, w);
  size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + offset);
    offset += p.size();
  }
  return out;
}

template <typename T>
Tensor<T> spatial_attend(const Tensor<T>& features, const Tensor<T>& mask) {
  if (mask.channels() != 1 || !features.same_spatial(mask.height(), mask.width())) {
    throw InvalidArgument("spatial_attend: mask must be single-channel with matching size");
  }
  Tensor<T> out = features;
  const size_t plane = mask.size();
  for (int c = 0; c < features.channels(); ++c) {
    T* dst = out.ptr() + static_cast<size_t>(c) * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] *= mask[i];
  }
  return out;
}

template <typename T>
Tensor<T> attention_fuse(const Tensor<T>& semantic_feature, const Tensor<T>& noise_feature,
                         const Tensor<T>& mask) {
  if (!semantic_feature.same_spatial(noise_feature.height(), noise_feature.width())) {
    throw InvalidArgument("attention_fuse: feature sizes differ");
  }
  const Tensor<T> parts[] = {semantic_feature, noise_feature};
  return spatial_attend(concat_channels<T>(parts), mask);
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  std::vector<T> p(logits.begin(), logits.end());
  const T peak = *std::max_element(p.begin(), p.end());
  T total = 0;
  for (T& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (T& v : p) v /= total;
  return p;
}

// ---------------------------------------------------------------------------
// Model

template <typename T>
struct Model<T>::Cache {
  std::unique_ptr<typename Backbone<T>::State> backbone;
  std::array<typename PredictionHead<T>::Cache, 3> semantic, noise;
  std::array<typename SizeAlignBlock<T>::Cache, 2> semantic_align, noise_align;
  std::vector<Tensor<T>> parts;  // fusion inputs, in concatenation order
  Tensor<T> concat;
  bool noise_stream = true;
  bool attention_overridden = false;
  std::vector<T> pooled, hidden;
};

template <typename T>
Model<T>::Model(const ModelConfig& cfg, BackboneFactory<T> factory) : cfg_(cfg) {
  cfg_.validate();
  if (factory) {
    backbone_ = factory(store_, cfg_);
  } else if (cfg_.backbone == "reference") {
    backbone_ = std::make_unique<ReferenceBackbone<T>>(store_, cfg_);
  } else {
    throw InvalidArgument("unknown backbone '" + cfg_.backbone + "' and no adapter supplied");
  }
  const auto strides = backbone_->tap_strides();
  if (!(strides[0] < strides[1] && strides[1] < strides[2])) {
    throw InvalidArgument("backbone tap strides must be strictly increasing");
  }
  const auto tap_channels = backbone_->tap_channels();
  const int c = cfg_.head_channels;
  for (int j = 0; j < 3; ++j) {
    const std::string suffix = std::to_string(j + 1);
    semantic_heads_[j] = PredictionHead<T>(store_, "semantic_head" + suffix, tap_channels[j], c,
                                           1, true, Group::kSemanticHead);
    noise_heads_[j] = PredictionHead<T>(store_, "noise_head" + suffix, tap_channels[j], c, 3,
                                        false, Group::kNoiseHead);
  }
  if (cfg_.aggregation) {
    for (int j = 0; j < 2; ++j) {
      int ratio = strides[2] / strides[j];
      int halvings = 0;
      while ((1 << halvings) < ratio) ++halvings;
      if ((1 << halvings) != ratio || strides[2] % strides[j] != 0) {
        throw InvalidArgument("aggregation requires power-of-two stride ratios");
      }
      const std::string suffix = std::to_string(j + 1);
      semantic_align_[j] =
          SizeAlignBlock<T>(store_, "semantic_align" + suffix, c, halvings, Group::kSemanticAlign);
      noise_align_[j] =
          SizeAlignBlock<T>(store_, "noise_align" + suffix, c, halvings, Group::kNoiseAlign);
    }
  }
  hidden_ = nn::Linear<T>(store_, "classifier.hidden", fused_channels(), cfg_.classifier_hidden,
                          Group::kClassifier);
  output_ = nn::Linear<T>(store_, "classifier.output", cfg_.classifier_hidden, cfg_.num_classes,
                          Group::kClassifier, Init::kXavier);
}

template <typename T>
int Model<T>::fused_channels() const {
  return (cfg_.aggregation ? 6 : 2) * cfg_.head_channels;
}

template <typename T>
std::array<int, 2> Model<T>::map_size(int tap, int input_h, int input_w) const {
  const int s = strides()[tap];
  return {(input_h + s - 1) / s, (input_w + s - 1) / s};
}

template <typename T>
std::vector<T> Model<T>::classify(const Tensor<T>& attended) const {
  std::vector<T> pooled(attended.channels(), T{0});
  const T inv = T{1} / static_cast<T>(attended.plane_size());
  for (int c = 0; c < attended.channels(); ++c) {
    T s = 0;
    for (T v : attended.plane(c)) s += v;
    pooled[c] = s * inv;
  }
  std::vector<T> hidden = hidden_.forward(store_, pooled);
  for (T& v : hidden) v = v > T{0} ? v : T{0};
  return output_.forward(store_, hidden);
}

template <typename T>
Tensor<T> Model<T>::aggregate_features(const std::array<Tensor<T>, 3>& semantic_features,
                                       const std::array<Tensor<T>, 3>& noise_features,
                                       const Tensor<T>& mask3) const {
  if (!cfg_.aggregation) throw InvalidArgument("aggregate_features: aggregation mode is off");
  std::vector<Tensor<T>> parts;
  typename SizeAlignBlock<T>::Cache scratch;
  for (int j = 0; j < 2; ++j) parts.push_back(semantic_align_[j].forward(store_, semantic_features[j], scratch));
  parts.push_back(semantic_features[2]);
  for (int j = 0; j < 2; ++j) parts.push_back(noise_align_[j].forward(store_, noise_features[j], scratch));
  parts.push_back(noise_features[2]);
  for (const auto& p : parts) {
    if (!p.same_spatial(mask3.height(), mask3.width())) {
      throw InvalidArgument("aggregate_features: aligned feature size does not match the mask");
    }
  }
  return spatial_attend(concat_channels<T>(parts), mask3);
}

template <typename T>
typename Model<T>::Output Model<T>::forward(const Tensor<T>& input, const ForwardOptions& options,
                                            const Tensor<T>* attention_override) const {
  const int s3 = strides()[2];
  if (input.channels() != 3) throw InvalidArgument("forward: input must have 3 channels");
  if (input.height() % s3 != 0 || input.width() % s3 != 0 || input.height() == 0 ||
      input.width() == 0) {
    throw InvalidArgument("forward: input size must be a positive multiple of " +
                          std::to_string(s3));
  }
  Output out;
  out.cache = std::make_shared<Cache>();
  Cache& cache = *out.cache;
  cache.noise_stream = options.noise_stream;

  out.taps = backbone_->forward(store_, input, cache.backbone);
  for (int j = 0; j < 3; ++j) {
    const auto [h, w] = map_size(j, input.height(), input.width());
    if (!out.taps[j].same_spatial(h, w)) {
      throw InvalidArgument("backbone tap " + std::to_string(j + 1) + " has unexpected size");
    }
    semantic_heads_[j].forward(store_, out.taps[j], cache.semantic[j]);
    out.semantic_features[j] = cache.semantic[j].feature;
    out.seg_maps[j] = cache.semantic[j].map;
    if (options.noise_stream) {
      noise_heads_[j].forward(store_, out.taps[j], cache.noise[j]);
      out.noise_features[j] = cache.noise[j].feature;
      out.noise_maps[j] = cache.noise[j].map;
    } else {
      out.noise_features[j] = Tensor<T>(cfg_.head_channels, h, w);
    }
  }

  if (attention_override) {
    if (!attention_override->same_shape(out.seg_maps[2])) {
      throw InvalidArgument("forward: attention override has the wrong shape");
    }
    out.attention = *attention_override;
    cache.attention_overridden = true;
  } else {
    out.attention = out.seg_maps[2];
  }

  cache.parts.clear();
  if (cfg_.aggregation) {
    for (int j = 0; j < 2; ++j) {
      cache.parts.push_back(
          semantic_align_[j].forward(store_, out.semantic_features[j], cache.semantic_align[j]));
    }
    cache.parts.push_back(out.semantic_features[2]);
    for (int j = 0; j < 2; ++j) {
      if (options.noise_stream) {
        cache.parts.push_back(
            noise_align_[j].forward(store_, out.noise_features[j], cache.noise_align[j]));
      } else {
        cache.parts.emplace_back(cfg_.head_channels, out.taps[2].height(), out.taps[2].width());
      }
    }
    cache.parts.push_back(out.noise_features[2]);
  } else {
    cache.parts = {out.semantic_features[2], out.noise_features[2]};
  }
  cache.concat = concat_channels<T>(cache.parts);
  out.attended = spatial_attend(cache.concat, out.attention);

  cache.pooled.assign(out.attended.channels(), T{0});
  const T inv = T{1} / static_cast<T>(out.attended.plane_size());
  for (int c = 0; c < out.attended.channels(); ++c) {
    T s = 0;
    for (T v : out.attended.plane(c)) s += v;
    cache.pooled[c] = s * inv;
  }
  cache.hidden = hidden_.forward(store_, cache.pooled);
  for (T& v : cache.hidden) v = v > T{0} ? v : T{0};
  out.logits = output_.forward(store_, cache.hidden);
  out.probs = softmax<T>(out.logits);
  return out;
}

template <typename T>
void Model<T>::backward(const Output& out, const OutputGrads& g, std::span<T> param_grads) const {
  if (param_grads.size() != store_.size()) {
    throw InvalidArgument("backward: gradient buffer size mismatch");
  }
  const Cache& cache = *out.cache;
  const int h3 = out.attended.height(), w3 = out.attended.width();

  // Classifier.
  Tensor<T> d_concat;
  Tensor<T> d_attention(1, h3, w3);
  if (!g.logits.empty()) {
    std::vector<T> d_hidden = output_.backward(store_, cache.hidden, g.logits, param_grads);
    for (size_t i = 0; i < d_hidden.size(); ++i) {
      if (!(cache.hidden[i] > T{0})) d_hidden[i] = T{0};
    }
    std::vector<T> d_pooled = hidden_.backward(store_, cache.pooled, d_hidden, param_grads);
    const T inv = T{1} / static_cast<T>(h3 * w3);
    Tensor<T> d_attended(out.attended.channels(), h3, w3);
    for (int c = 0; c < d_attended.channels(); ++c) {
      for (T& v : d_attended.plane(c)) v = d_pooled[c] * inv;
    }
    d_concat = spatial_attend(d_attended, out.attention);
    if (!cache.attention_overridden) {
      const size_t plane = static_cast<size_t>(h3) * w3;
      for (int c = 0; c < d_attended.channels(); ++c) {
        const T* da = d_attended.ptr() + static_cast<size_t>(c) * plane;
        const T* x = cache.concat.ptr() + static_cast<size_t>(c) * plane;
        for (size_t i = 0; i < plane; ++i) d_attention[i] += da[i] * x[i];
      }
    }
  }

  // Split the concatenated gradient back into fusion parts.
  std::vector<Tensor<T>> d_parts;
  if (!d_concat.empty()) {
    size_t offset = 0;
    for (const auto& p : cache.parts) {
      Tensor<T> d(p.channels(), p.height(), p.width());
      std::copy(d_concat.data().begin() + offset, d_concat.data().begin() + offset + p.size(),
                d.data().begin());
      offset += p.size();
      d_parts.push_back(std::move(d));
    }
  }

  std::array<Tensor<T>, 3> d_sem_feat, d_noise_feat;
  if (!d_parts.empty()) {
    if (cfg_.aggregation) {
      for (int j = 0; j < 2; ++j) {
        d_sem_feat[j] = semantic_align_[j].backward(store_, cache.semantic_align[j], d_parts[j],
                                                    param_grads);
        if (cache.noise_stream) {
          d_noise_feat[j] = noise_align_[j].backward(store_, cache.noise_align[j], d_parts[3 + j],
                                                     param_grads);
        }
      }
      d_sem_feat[2] = d_parts[2];
      d_noise_feat[2] = d_parts[5];
    } else {
      d_sem_feat[2] = d_parts[0];
      d_noise_feat[2] = d_parts[1];
    }
  }

  Taps<T> d_taps;
  for (int j = 0; j < 3; ++j) {
    Tensor<T> d_map = g.seg_maps[j];
    if (j == 2 && !cache.attention_overridden && !g.logits.empty()) {
      if (d_map.empty()) {
        d_map = d_attention;
      } else {
        nn::add_inplace(d_map, d_attention);
      }
    }
    d_taps[j] = semantic_heads_[j].backward(store_, cache.semantic[j], d_sem_feat[j], d_map,
                                            param_grads);
    if (cache.noise_stream) {
      nn::add_inplace(d_taps[j], noise_heads_[j].backward(store_, cache.noise[j], d_noise_feat[j],
                                                          g.noise_maps[j], param_grads));
    }
  }
  backbone_->backward(store_, *cache.backbone, d_taps, param_grads);
}

#define TELLTALE_INSTANTIATE_NET(T)                                                        \
  template class ReferenceBackbone<T>;                                                     \
  template class PredictionHead<T>;                                                        \
  template class SizeAlignBlock<T>;                                                        \
  template class Model<T>;                                                                 \
  template Tensor<T> concat_channels<T>(std::span<const Tensor<T>>);                       \
  template Tensor<T> spatial_attend<T>(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> attention_fuse<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template std::vector<T> softmax<T>(std::span<const T>);

TELLTALE_INSTANTIATE_NET(float)
TELLTALE_INSTANTIATE_NET(double)

}  // namespace telltale::net
