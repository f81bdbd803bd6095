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

#include "telltale/image.hpp"

namespace telltale::maskgen {

// Values in [0, 1]; binary at full resolution, soft after align_mask.
using BinaryMask = Plane;

struct ThresholdConfig {
  double threshold = 0.05;  // on the [0, 1] intensity scale, exclusive bounds
  bool morph_cleanup = true;
};

// Mask = 1 where the largest per-channel absolute difference, divided by
// 255, reaches the threshold. With cleanup, one 3x3 closing then opening.
BinaryMask pair_to_mask(const Image& real_image, const Image& fake_image,
                        const ThresholdConfig& cfg = {});

// Area-averaging downsample / bilinear upsample (per axis) to the target
// size. Values stay in [0, 1] and are used as soft targets.
BinaryMask align_mask(const BinaryMask& mask, int target_h, int target_w);

// Generic per-channel resize with the same rules as align_mask. Used to build
// per-scale noise labels.
Tensor<double> resize_area(const Tensor<double>& input, int target_h, int target_w);

// 3x3 binary morphology; out-of-image pixels are ignored.
BinaryMask dilate3(const BinaryMask& mask);
BinaryMask erode3(const BinaryMask& mask);

}  // namespace telltale::maskgen
