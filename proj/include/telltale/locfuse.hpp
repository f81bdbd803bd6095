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

#include <array>
#include <span>
#include <string>

#include "telltale/image.hpp"

namespace telltale::locfuse {

struct FusionWeights {
  double gamma1 = 0.1;
  double gamma2 = 0.2;
  double gamma3 = 0.7;

  // Rescales to unit sum. Throws InvalidArgument on negative or all-zero
  // weights. Idempotent on already normalized weights.
  FusionWeights normalized() const;
  // Parses "g1,g2,g3".
  static FusionWeights parse(const std::string& text);
};

inline constexpr double kDefaultBinarizeThreshold = 0.5;

// Bilinear resize (half-pixel centres, clamped borders) of a single plane.
Plane upsample_bilinear(const Plane& map, int target_h, int target_w);

// gamma1 * up(M1) + gamma2 * up(M2) + gamma3 * up(M3), clamped to [0, 1].
// Weights are normalized first.
Plane fuse_maps(std::span<const Plane, 3> maps, int target_h, int target_w,
                const FusionWeights& weights = {});

// 1 where map >= threshold. Throws InvalidArgument unless 0 < threshold < 1.
Plane binarize(const Plane& map, double threshold = kDefaultBinarizeThreshold);

}  // namespace telltale::locfuse
