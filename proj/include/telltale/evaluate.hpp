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

// Model evaluation over prepared samples: fake scores, fused localization
// maps, detection and localization metrics, and file exports.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "telltale/dataset.hpp"
#include "telltale/locfuse.hpp"
#include "telltale/metrics.hpp"
#include "telltale/net.hpp"

namespace telltale::evaluate {

struct EvalOptions {
  locfuse::FusionWeights gamma;
  double map_threshold = locfuse::kDefaultBinarizeThreshold;
  double decision_threshold = 0.5;
  int workers = 0;  // 0 = data::worker_count()
};

struct SamplePrediction {
  double score = 0.0;  // P(fake)
  int predicted_class = 0;
  std::vector<double> probs;
  std::array<Plane, 3> seg_maps;
  Plane fused;  // full resolution, [0, 1]
};

SamplePrediction predict(const net::Model<float>& model, const Tensor<float>& input,
                         const locfuse::FusionWeights& gamma = {});

struct EvalResult {
  metrics::EvalReport report;
  std::vector<metrics::ScoredSample> scored;
  std::vector<SamplePrediction> predictions;
};

// Localization metrics use samples that carry a mask; `localization`
// averages the manipulated ones, `localization_all` every one. Throws
// DataError when the samples hold a single class.
EvalResult evaluate(const net::Model<float>& model, std::span<const data::PreparedSample> samples,
                    const EvalOptions& options = {}, const std::string& name = "");

// roc.csv (threshold,fpr,tpr) and pr.csv (threshold,recall,precision).
void write_curves(const std::filesystem::path& dir, std::span<const metrics::ScoredSample> scored);

// 8-bit PNG of round(255 p) plus a float32 raw array next to it (".f32").
void export_map(const std::filesystem::path& png_path, const Plane& map);

// Raw float dumps of the three semantic features and the predicted maps.
void export_forward_debug(const std::filesystem::path& dir, const net::Model<float>::Output& out);

std::string format_number(double value);

}  // namespace telltale::evaluate
