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

#include "telltale/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "telltale/error.hpp"

namespace telltale::losses {
namespace {

template <typename T>
void check_batch(std::span<const MapSet<T>> pred, std::span<const MapSet<T>> gt,
                 const char* what) {
  if (pred.size() != gt.size()) {
    throw InvalidArgument(std::string(what) + ": batch sizes differ");
  }
  if (pred.empty()) throw InvalidArgument(std::string(what) + ": empty batch");
  for (size_t i = 0; i < pred.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      if (!pred[i][j].same_shape(gt[i][j]) || pred[i][j].empty()) {
        throw InvalidArgument(std::string(what) + ": shape mismatch at sample " +
                              std::to_string(i) + ", scale " + std::to_string(j));
      }
    }
  }
}

template <typename T>
T bce(T p, T target) {
  p = clamp_probability(p);
  return -(target * std::log(p) + (T{1} - target) * std::log(T{1} - p));
}

}  // namespace

template <typename T>
T clamp_probability(T p) {
  const T eps = static_cast<T>(kEpsilon);
  return std::clamp(p, eps, T{1} - eps);
}

template <typename T>
T classification_loss(std::span<const T> fake_probs, std::span<const int> labels) {
  if (fake_probs.size() != labels.size() || fake_probs.empty()) {
    throw InvalidArgument("classification_loss: need equally many probabilities and labels");
  }
  T total = 0;
  for (size_t i = 0; i < fake_probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("classification_loss: label not 0/1");
    total += bce(fake_probs[i], static_cast<T>(labels[i]));
  }
  return total / static_cast<T>(fake_probs.size());
}

template <typename T>
T categorical_loss(std::span<const std::vector<T>> probs, std::span<const int> labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw InvalidArgument("categorical_loss: need equally many probability vectors and labels");
  }
  T total = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(probs[i].size())) {
      throw InvalidArgument("categorical_loss: label out of range");
    }
    total -= std::log(clamp_probability(probs[i][labels[i]]));
  }
  return total / static_cast<T>(probs.size());
}

template <typename T>
std::vector<std::vector<T>> categorical_logit_grad(std::span<const std::vector<T>> probs,
                                                   std::span<const int> labels) {
  const T inv_n = T{1} / static_cast<T>(probs.size());
  const T eps = static_cast<T>(kEpsilon);
  std::vector<std::vector<T>> grads;
  grads.reserve(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    std::vector<T> g(p.size(), T{0});
    const T py = p[labels[i]];
    if (py >= eps && py <= T{1} - eps) {
      for (size_t k = 0; k < p.size(); ++k) {
        g[k] = (p[k] - (static_cast<int>(k) == labels[i] ? T{1} : T{0})) * inv_n;
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

template <typename T>
std::array<T, 3> mask_loss_per_scale(std::span<const MapSet<T>> pred,
                                     std::span<const MapSet<T>> gt) {
  check_batch(pred, gt, "mask_loss");
  std::array<T, 3> terms{};
  for (int j = 0; j < 3; ++j) {
    T scale_total = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
      const auto& p = pred[i][j];
      const auto& m = gt[i][j];
      T s = 0;
      for (size_t k = 0; k < p.size(); ++k) s += bce(p[k], m[k]);
      scale_total += s / static_cast<T>(p.size());
    }
    terms[j] = scale_total / static_cast<T>(pred.size());
  }
  return terms;
}

template <typename T>
T mask_loss(std::span<const MapSet<T>> pred, std::span<const MapSet<T>> gt) {
  const auto terms = mask_loss_per_scale(pred, gt);
  return terms[0] + terms[1] + terms[2];
}

template <typename T>
std::vector<MapSet<T>> mask_loss_grad(std::span<const MapSet<T>> pred,
                                      std::span<const MapSet<T>> gt) {
  check_batch(pred, gt, "mask_loss_grad");
  const T eps = static_cast<T>(kEpsilon);
  std::vector<MapSet<T>> grads(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto& p = pred[i][j];
      const auto& m = gt[i][j];
      Tensor<T> g(p.channels(), p.height(), p.width());
      const T scale = T{1} / (static_cast<T>(pred.size()) * static_cast<T>(p.size()));
      for (size_t k = 0; k < p.size(); ++k) {
        const T x = p[k];
        if (x < eps || x > T{1} - eps) continue;
        g[k] = -(m[k] / x - (T{1} - m[k]) / (T{1} - x)) * scale;
      }
      grads[i][j] = std::move(g);
    }
  }
  return grads;
}

template <typename T>
T noise_loss(std::span<const MapSet<T>> pred, std::span<const MapSet<T>> gt, Reduction reduction) {
  check_batch(pred, gt, "noise_loss");
  T total = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto& p = pred[i][j];
      const auto& n = gt[i][j];
      T s = 0;
      for (size_t k = 0; k < p.size(); ++k) s += std::abs(n[k] - p[k]);
      total += reduction == Reduction::kMean ? s / static_cast<T>(p.size()) : s;
    }
  }
  return total / static_cast<T>(pred.size());
}

template <typename T>
std::vector<MapSet<T>> noise_loss_grad(std::span<const MapSet<T>> pred,
                                       std::span<const MapSet<T>> gt, Reduction reduction) {
  check_batch(pred, gt, "noise_loss_grad");
  std::vector<MapSet<T>> grads(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto& p = pred[i][j];
      const auto& n = gt[i][j];
      T scale = T{1} / static_cast<T>(pred.size());
      if (reduction == Reduction::kMean) scale /= static_cast<T>(p.size());
      Tensor<T> g(p.channels(), p.height(), p.width());
      for (size_t k = 0; k < p.size(); ++k) {
        const T d = p[k] - n[k];
        g[k] = d > T{0} ? scale : (d < T{0} ? -scale : T{0});
      }
      grads[i][j] = std::move(g);
    }
  }
  return grads;
}

LossBundle total_loss(double classification, double noise, double mask, double lambda1,
                      double lambda2) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw InvalidArgument("total_loss: negative loss weight");
  LossBundle b;
  b.classification = classification;
  b.noise = noise;
  b.mask = mask;
  b.lambda1 = lambda1;
  b.lambda2 = lambda2;
  b.total = classification + lambda1 * noise + lambda2 * mask;
  return b;
}

#define TELLTALE_INSTANTIATE_LOSSES(T)                                                            \
  template T clamp_probability<T>(T);                                                             \
  template T classification_loss<T>(std::span<const T>, std::span<const int>);                    \
  template T categorical_loss<T>(std::span<const std::vector<T>>, std::span<const int>);          \
  template std::vector<std::vector<T>> categorical_logit_grad<T>(std::span<const std::vector<T>>, \
                                                                 std::span<const int>);           \
  template std::array<T, 3> mask_loss_per_scale<T>(std::span<const MapSet<T>>,                    \
                                                   std::span<const MapSet<T>>);                   \
  template T mask_loss<T>(std::span<const MapSet<T>>, std::span<const MapSet<T>>);                \
  template std::vector<MapSet<T>> mask_loss_grad<T>(std::span<const MapSet<T>>,                   \
                                                    std::span<const MapSet<T>>);                  \
  template T noise_loss<T>(std::span<const MapSet<T>>, std::span<const MapSet<T>>, Reduction);    \
  template std::vector<MapSet<T>> noise_loss_grad<T>(std::span<const MapSet<T>>,                  \
                                                     std::span<const MapSet<T>>, Reduction);

TELLTALE_INSTANTIATE_LOSSES(float)
TELLTALE_INSTANTIATE_LOSSES(double)

}  // namespace telltale::losses
