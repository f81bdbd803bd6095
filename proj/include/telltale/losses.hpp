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

// Supervision terms of the joint objective and their gradients with
// respect to the network outputs:
//   classification  L_c = mean_i -log p_i[label_i]      (binary: BCE on p_fake)
//   mask            L_b = mean_i sum_scales mean_px BCE(M_hat, M)
//   noise           L_n = mean_i sum_scales ||n - n_hat||_1 (mean or sum over elements)
//   total           L   = L_c + lambda1 * L_n + lambda2 * L_b

#include <array>
#include <span>
#include <vector>

#include "telltale/tensor.hpp"

namespace telltale::losses {

inline constexpr double kEpsilon = 1e-7;

template <typename T>
using MapSet = std::array<Tensor<T>, 3>;

enum class Reduction { kMean, kSum };

struct LossBundle {
  double classification = 0.0;  // L_c
  double noise = 0.0;           // L_n
  double mask = 0.0;            // L_b
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double total = 0.0;
};

template <typename T>
T clamp_probability(T p);

// Binary cross-entropy on per-sample fake probabilities; labels in {0, 1}.
template <typename T>
T classification_loss(std::span<const T> fake_probs, std::span<const int> labels);

// Categorical cross-entropy on per-sample class-probability vectors. With
// two classes this equals classification_loss on probs[i][1].
template <typename T>
T categorical_loss(std::span<const std::vector<T>> probs, std::span<const int> labels);

// d categorical_loss / d logits, for probabilities produced by softmax.
// Samples whose target probability is clamped get a zero gradient.
template <typename T>
std::vector<std::vector<T>> categorical_logit_grad(std::span<const std::vector<T>> probs,
                                                   std::span<const int> labels);

// Per-scale terms (1/N) sum_i mean_px BCE at each scale; mask_loss is their sum.
template <typename T>
std::array<T, 3> mask_loss_per_scale(std::span<const MapSet<T>> pred, std::span<const MapSet<T>> gt);
template <typename T>
T mask_loss(std::span<const MapSet<T>> pred, std::span<const MapSet<T>> gt);
// d mask_loss / d pred (zero where the prediction is clamped).
template <typename T>
std::vector<MapSet<T>> mask_loss_grad(std::span<const MapSet<T>> pred,
                                      std::span<const MapSet<T>> gt);

template <typename T>
T noise_loss(std::span<const MapSet<T>> pred, std::span<const MapSet<T>> gt,
             Reduction reduction = Reduction::kMean);
// Subgradient sign(pred - gt), zero at equality.
template <typename T>
std::vector<MapSet<T>> noise_loss_grad(std::span<const MapSet<T>> pred,
                                       std::span<const MapSet<T>> gt,
                                       Reduction reduction = Reduction::kMean);

// Throws InvalidArgument on negative weights.
LossBundle total_loss(double classification, double noise, double mask, double lambda1,
                      double lambda2);

}  // namespace telltale::losses
