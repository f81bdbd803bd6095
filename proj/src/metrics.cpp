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

#include "telltale/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "telltale/error.hpp"

namespace telltale::metrics {
namespace {

struct Counts {
  size_t intersection = 0, pred = 0, gt = 0, agree = 0, total = 0;
};

Counts count_masks(const Plane& pred, const Plane& gt, const char* what) {
  if (!pred.same_shape(gt)) throw InvalidArgument(std::string(what) + ": mask shapes differ");
  Counts c;
  c.total = pred.size();
  for (size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i], g = gt[i];
    if ((p != 0.0 && p != 1.0) || (g != 0.0 && g != 1.0)) {
      throw InvalidArgument(std::string(what) + ": masks must be binary");
    }
    const bool pp = p == 1.0, gg = g == 1.0;
    c.pred += pp;
    c.gt += gg;
    c.intersection += pp && gg;
    c.agree += pp == gg;
  }
  return c;
}

void require_both_classes(std::span<const ScoredSample> samples, const char* what) {
  size_t pos = 0, neg = 0;
  for (const auto& s : samples) {
    if (s.label != 0 && s.label != 1) throw InvalidArgument(std::string(what) + ": label not 0/1");
    if (!std::isfinite(s.score)) throw InvalidArgument(std::string(what) + ": non-finite score");
    (s.label == 1 ? pos : neg)++;
  }
  if (pos == 0 || neg == 0) {
    throw DataError(std::string(what) + ": single-class input (need real and fake samples)");
  }
}

// Cumulative (fp, tp) after each group of tied scores, descending.
struct Operating {
  double threshold;
  size_t fp, tp;
};

std::vector<Operating> operating_points(std::span<const ScoredSample> samples) {
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return samples[a].score > samples[b].score; });
  std::vector<Operating> points;
  points.push_back({std::numeric_limits<double>::infinity(), 0, 0});
  size_t fp = 0, tp = 0;
  for (size_t i = 0; i < order.size();) {
    const double score = samples[order[i]].score;
    while (i < order.size() && samples[order[i]].score == score) {
      (samples[order[i]].label == 1 ? tp : fp)++;
      ++i;
    }
    points.push_back({score, fp, tp});
  }
  return points;
}

}  // namespace

double iou(const Plane& pred, const Plane& gt) {
  const Counts c = count_masks(pred, gt, "iou");
  const size_t uni = c.pred + c.gt - c.intersection;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(uni);
}

double pbca(const Plane& pred, const Plane& gt) {
  const Counts c = count_masks(pred, gt, "pbca");
  if (c.total == 0) throw InvalidArgument("pbca: empty masks");
  return static_cast<double>(c.agree) / static_cast<double>(c.total);
}

double iinc(const Plane& pred, const Plane& gt) {
  const Counts c = count_masks(pred, gt, "iinc");
  if (c.pred == 0 && c.gt == 0) return 0.0;
  if (c.pred == 0 || c.gt == 0) return 1.0;
  const double inter = static_cast<double>(c.intersection);
  return 0.5 * ((1.0 - inter / static_cast<double>(c.pred)) +
                (1.0 - inter / static_cast<double>(c.gt)));
}

double roc_auc(std::span<const ScoredSample> samples) {
  require_both_classes(samples, "roc_auc");
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return samples[a].score < samples[b].score; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  size_t positives = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t k = i; k < j; ++k) {
      if (samples[order[k]].label == 1) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const double n1 = static_cast<double>(positives);
  const double n0 = static_cast<double>(samples.size() - positives);
  return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

double eer(std::span<const ScoredSample> samples) {
  require_both_classes(samples, "eer");
  const auto points = operating_points(samples);
  const auto& last = points.back();
  const double negatives = static_cast<double>(last.fp);
  const double positives = static_cast<double>(last.tp);
  double prev_fpr = 0.0, prev_fnr = 1.0;
  for (size_t k = 1; k < points.size(); ++k) {
    const double fpr = static_cast<double>(points[k].fp) / negatives;
    const double fnr = 1.0 - static_cast<double>(points[k].tp) / positives;
    const double prev_gap = prev_fpr - prev_fnr;
    const double gap = fpr - fnr;
    if (prev_gap == 0.0) return prev_fpr;
    if (gap >= 0.0) {
      const double t = prev_gap / (prev_gap - gap);
      return prev_fpr + t * (fpr - prev_fpr);
    }
    prev_fpr = fpr;
    prev_fnr = fnr;
  }
  return prev_fpr;  // unreachable: the last point has FNR = 0
}

double average_precision(std::span<const ScoredSample> samples) {
  size_t positives = 0;
  for (const auto& s : samples) {
    if (s.label != 0 && s.label != 1) throw InvalidArgument("average_precision: label not 0/1");
    positives += s.label == 1;
  }
  if (positives == 0) throw DataError("average_precision: no positive samples");
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return samples[a].score > samples[b].score; });
  double ap = 0.0;
  size_t tp = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (samples[order[k]].label == 1) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(positives);
}

ConfusionRates confusion_rates(std::span<const ScoredSample> samples, double threshold) {
  if (samples.empty()) throw InvalidArgument("confusion_rates: no samples");
  size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (const auto& s : samples) {
    const bool predicted_fake = s.score >= threshold;
    if (s.label == 1) {
      (predicted_fake ? tp : fn)++;
    } else {
      (predicted_fake ? fp : tn)++;
    }
  }
  ConfusionRates r;
  r.acc = static_cast<double>(tp + tn) / static_cast<double>(samples.size());
  if (fp + tn > 0) r.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
  if (fn + tp > 0) r.fnr = static_cast<double>(fn) / static_cast<double>(fn + tp);
  return r;
}

ClassRecall per_class_recall(std::span<const int> predicted, std::span<const int> truth,
                             int num_classes) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("per_class_recall: prediction and label counts differ");
  }
  std::vector<size_t> correct(num_classes, 0), total(num_classes, 0);
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes) {
      throw InvalidArgument("per_class_recall: label out of range");
    }
    ++total[truth[i]];
    correct[truth[i]] += predicted[i] == truth[i];
  }
  ClassRecall out;
  out.recall.resize(num_classes);
  double sum = 0.0;
  int defined = 0;
  for (int k = 0; k < num_classes; ++k) {
    if (total[k] == 0) continue;
    out.recall[k] = static_cast<double>(correct[k]) / static_cast<double>(total[k]);
    sum += *out.recall[k];
    ++defined;
  }
  out.average = defined > 0 ? sum / defined : 0.0;
  return out;
}

std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
  require_both_classes(samples, "roc_curve");
  const auto points = operating_points(samples);
  const double negatives = static_cast<double>(points.back().fp);
  const double positives = static_cast<double>(points.back().tp);
  std::vector<RocPoint> curve;
  for (const auto& p : points) {
    curve.push_back({p.threshold, static_cast<double>(p.fp) / negatives,
                     static_cast<double>(p.tp) / positives});
  }
  return curve;
}

std::vector<PrPoint> pr_curve(std::span<const ScoredSample> samples) {
  require_both_classes(samples, "pr_curve");
  const auto points = operating_points(samples);
  const double positives = static_cast<double>(points.back().tp);
  std::vector<PrPoint> curve;
  for (size_t k = 1; k < points.size(); ++k) {
    const auto& p = points[k];
    curve.push_back({p.threshold, static_cast<double>(p.tp) / positives,
                     static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fp)});
  }
  return curve;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

nlohmann::json localization_json(const LocalizationReport& l) {
  return {{"iou", l.iou}, {"pbca", l.pbca}, {"iinc", l.iinc}, {"samples", l.samples}};
}

LocalizationReport localization_from(const nlohmann::json& j) {
  return {j.at("iou").get<double>(), j.at("pbca").get<double>(), j.at("iinc").get<double>(),
          j.value("samples", 0)};
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["samples"] = samples;
  j["detection"] = {{"acc", acc}, {"auc", auc}, {"eer", eer}, {"ap", ap},
                    {"fpr", optional_json(fpr)}, {"fnr", optional_json(fnr)}};
  if (localization) j["localization"] = localization_json(*localization);
  if (localization_all) j["localization_all"] = localization_json(*localization_all);
  if (class_recall) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : class_recall->recall) r.push_back(optional_json(v));
    j["class_recall"] = {{"recall", r}, {"average", class_recall->average}};
  }
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.name = j.value("name", std::string());
    r.samples = j.value("samples", 0);
    const auto& d = j.at("detection");
    r.acc = d.at("acc").get<double>();
    r.auc = d.at("auc").get<double>();
    r.eer = d.at("eer").get<double>();
    r.ap = d.at("ap").get<double>();
    r.fpr = optional_from(d, "fpr");
    r.fnr = optional_from(d, "fnr");
    if (j.contains("localization") && !j.at("localization").is_null()) {
      r.localization = localization_from(j.at("localization"));
    }
    if (j.contains("localization_all") && !j.at("localization_all").is_null()) {
      r.localization_all = localization_from(j.at("localization_all"));
    }
    if (j.contains("class_recall") && !j.at("class_recall").is_null()) {
      ClassRecall cr;
      for (const auto& v : j.at("class_recall").at("recall")) {
        cr.recall.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      }
      cr.average = j.at("class_recall").at("average").get<double>();
      r.class_recall = cr;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

EvalReport detection_report(std::span<const ScoredSample> samples, double threshold) {
  EvalReport r;
  r.samples = static_cast<int>(samples.size());
  r.auc = roc_auc(samples);
  r.eer = eer(samples);
  r.ap = average_precision(samples);
  const ConfusionRates c = confusion_rates(samples, threshold);
  r.acc = c.acc;
  r.fpr = c.fpr;
  r.fnr = c.fnr;
  return r;
}

}  // namespace telltale::metrics
