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

// Frame-level detection metrics and mask-level localization metrics.
//
// Localization metrics take binary masks (every value exactly 0 or 1).
// IINC here is the symmetric non-containment mean
//   IINC = 1/2 [(1 - |P n G| / |P|) + (1 - |P n G| / |G|)]
// with IINC = 0 when both masks are empty and 1 when exactly one is. It is
// 0 for identical masks and 1 for disjoint ones.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "telltale/image.hpp"

namespace telltale::metrics {

struct ScoredSample {
  double score = 0.0;  // fake probability
  int label = 0;       // 0 = real, 1 = fake
};

// Throws InvalidArgument on shape mismatch or non-binary values.
double iou(const Plane& pred, const Plane& gt);
double pbca(const Plane& pred, const Plane& gt);
double iinc(const Plane& pred, const Plane& gt);

// Mann-Whitney statistic with half credit for ties. Throws DataError unless
// both classes are present.
double roc_auc(std::span<const ScoredSample> samples);

// FPR = FNR point, interpolated linearly between adjacent ROC operating
// points. Throws DataError unless both classes are present.
double eer(std::span<const ScoredSample> samples);

// sum_k (R_k - R_{k-1}) P_k over samples sorted by descending score, ties in
// input order. Throws DataError without positives.
double average_precision(std::span<const ScoredSample> samples);

struct ConfusionRates {
  double acc = 0.0;
  std::optional<double> fpr;  // undefined without real samples
  std::optional<double> fnr;  // undefined without fake samples
};

// Predicts fake when score >= threshold. Throws InvalidArgument on an empty
// sample list.
ConfusionRates confusion_rates(std::span<const ScoredSample> samples, double threshold = 0.5);

struct ClassRecall {
  std::vector<std::optional<double>> recall;  // per class; nullopt when absent from gt
  double average = 0.0;                       // unweighted mean over defined classes
};

ClassRecall per_class_recall(std::span<const int> predicted, std::span<const int> truth,
                             int num_classes = 5);

struct RocPoint {
  double threshold, fpr, tpr;
};
struct PrPoint {
  double threshold, recall, precision;
};

// One point per distinct score (predict fake when score >= threshold), plus
// the (0, 0) origin at threshold +inf.
std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples);
std::vector<PrPoint> pr_curve(std::span<const ScoredSample> samples);

struct LocalizationReport {
  double iou = 0.0;
  double pbca = 0.0;
  double iinc = 0.0;
  int samples = 0;
};

struct EvalReport {
  std::string name;
  int samples = 0;
  double acc = 0.0;
  double auc = 0.0;
  double eer = 0.0;
  double ap = 0.0;
  std::optional<double> fpr;
  std::optional<double> fnr;
  // Means over manipulated samples (the empty-mask convention makes pristine
  // samples trivially perfect); `localization_all` averages every sample.
  std::optional<LocalizationReport> localization;
  std::optional<LocalizationReport> localization_all;
  std::optional<ClassRecall> class_recall;

  nlohmann::json to_json() const;
  // Throws DataError on malformed input.
  static EvalReport from_json(const nlohmann::json& j);
};

// Detection part of a report. Throws DataError on single-class input.
EvalReport detection_report(std::span<const ScoredSample> samples, double threshold = 0.5);

}  // namespace telltale::metrics
