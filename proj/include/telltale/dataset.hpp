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

// Turns manifest records into network-ready samples: input scaled to
// [-1, 1], ground-truth mask, and per-scale mask and noise targets.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "telltale/image.hpp"
#include "telltale/losses.hpp"
#include "telltale/manifest.hpp"
#include "telltale/maskgen.hpp"
#include "telltale/residual.hpp"

namespace telltale::data {

struct PreparedSample {
  std::string id;  // image path
  int label = 0;   // class index, 0 = real
  int binary = 0;  // 0 = real, 1 = manipulated
  Tensor<float> input;
  Plane mask;             // full-resolution binary mask
  bool has_mask = false;  // false when a fake carries neither mask_path nor pair_path
  losses::MapSet<float> mask_targets;
  losses::MapSet<float> noise_targets;  // residual / 255, area-downsampled
};

struct PrepareOptions {
  double sigma_hq = residual::kSigmaHighQuality;
  double sigma_lq = residual::kSigmaLowQuality;
  residual::Filter filter = residual::Filter::kWavelet;
  maskgen::ThresholdConfig mask;
  std::array<int, 3> strides = {4, 8, 16};
  bool noise_targets = true;
  int workers = 0;  // 0 = worker_count()
};

// TELLTALE_WORKERS, or 1 when unset or invalid.
int worker_count();

// Runs fn(i) for i in [0, n) on `workers` threads. The first failing index
// (lowest i) has its exception rethrown after all threads join.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

// Image side lengths must be multiples of the largest stride. Throws
// DataError on unreadable files or shape mismatches.
PreparedSample prepare_sample(const ManifestRecord& record, const PrepareOptions& options);
std::vector<PreparedSample> prepare(const std::vector<ManifestRecord>& records,
                                    const PrepareOptions& options);

// Maps pixel values from [0, 255] to [-1, 1].
Tensor<float> normalize_input(const Image& image);

}  // namespace telltale::data
