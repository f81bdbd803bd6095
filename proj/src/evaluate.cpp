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

#include "telltale/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "telltale/error.hpp"

namespace telltale::evaluate {
namespace {

Plane to_plane(const Tensor<float>& t) { return t.cast<double>(); }

metrics::LocalizationReport mean_of(const std::vector<std::array<double, 3>>& rows) {
  metrics::LocalizationReport r;
  r.samples = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    r.iou += row[0];
    r.pbca += row[1];
    r.iinc += row[2];
  }
  if (!rows.empty()) {
    r.iou /= rows.size();
    r.pbca /= rows.size();
    r.iinc /= rows.size();
  }
  return r;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

SamplePrediction predict(const net::Model<float>& model, const Tensor<float>& input,
                         const locfuse::FusionWeights& gamma) {
  const auto out = model.forward(input);
  SamplePrediction p;
  p.probs.assign(out.probs.begin(), out.probs.end());
  p.score = p.probs.size() == 2 ? p.probs[1] : 1.0 - p.probs[0];
  p.predicted_class = static_cast<int>(
      std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin());
  for (int j = 0; j < 3; ++j) p.seg_maps[j] = to_plane(out.seg_maps[j]);
  p.fused = locfuse::fuse_maps(p.seg_maps, input.height(), input.width(), gamma);
  return p;
}

EvalResult evaluate(const net::Model<float>& model, std::span<const data::PreparedSample> samples,
                    const EvalOptions& options, const std::string& name) {
  EvalResult result;
  result.predictions.resize(samples.size());
  const int workers = options.workers > 0 ? options.workers : data::worker_count();
  const auto gamma = options.gamma.normalized();
  data::parallel_for(samples.size(), workers, [&](size_t i) {
    result.predictions[i] = predict(model, samples[i].input, gamma);
  });
  for (size_t i = 0; i < samples.size(); ++i) {
    result.scored.push_back({result.predictions[i].score, samples[i].binary});
  }
  result.report = metrics::detection_report(result.scored, options.decision_threshold);
  result.report.name = name;

  std::vector<std::array<double, 3>> fakes, all;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].has_mask) continue;
    const Plane pred = locfuse::binarize(result.predictions[i].fused, options.map_threshold);
    const std::array<double, 3> row = {metrics::iou(pred, samples[i].mask),
                                       metrics::pbca(pred, samples[i].mask),
                                       metrics::iinc(pred, samples[i].mask)};
    all.push_back(row);
    if (samples[i].binary == 1) fakes.push_back(row);
  }
  if (!fakes.empty()) result.report.localization = mean_of(fakes);
  if (!all.empty()) result.report.localization_all = mean_of(all);

  if (model.config().num_classes > 2) {
    std::vector<int> predicted, truth;
    for (size_t i = 0; i < samples.size(); ++i) {
      predicted.push_back(result.predictions[i].predicted_class);
      truth.push_back(samples[i].label);
    }
    result.report.class_recall =
        metrics::per_class_recall(predicted, truth, model.config().num_classes);
  }
  return result;
}

void write_curves(const std::filesystem::path& dir, std::span<const metrics::ScoredSample> scored) {
  std::filesystem::create_directories(dir);
  std::ofstream roc(dir / "roc.csv", std::ios::trunc);
  roc << "threshold,fpr,tpr\n";
  for (const auto& p : metrics::roc_curve(scored)) {
    roc << format_number(p.threshold) << "," << format_number(p.fpr) << ","
        << format_number(p.tpr) << "\n";
  }
  std::ofstream pr(dir / "pr.csv", std::ios::trunc);
  pr << "threshold,recall,precision\n";
  for (const auto& p : metrics::pr_curve(scored)) {
    pr << format_number(p.threshold) << "," << format_number(p.recall) << ","
       << format_number(p.precision) << "\n";
  }
  if (!roc || !pr) throw DataError("cannot write curves under " + dir.string());
}

void export_map(const std::filesystem::path& png_path, const Plane& map) {
  Plane scaled = map;
  for (size_t i = 0; i < scaled.size(); ++i) scaled[i] = std::round(255.0 * scaled[i]);
  save_png(png_path, scaled);
  auto raw = png_path;
  raw.replace_extension(".f32");
  write_raw_array(raw, map, {{"kind", "fused_map"}});
}

void export_forward_debug(const std::filesystem::path& dir, const net::Model<float>::Output& out) {
  std::filesystem::create_directories(dir);
  for (int j = 0; j < 3; ++j) {
    const std::string k = std::to_string(j + 1);
    write_raw_array(dir / ("f" + k + ".f32"), out.semantic_features[j].cast<double>(),
                    {{"kind", "semantic_feature"}, {"tap", j + 1}});
    write_raw_array(dir / ("m" + k + ".f32"), out.seg_maps[j].cast<double>(),
                    {{"kind", "semantic_map"}, {"tap", j + 1}});
    if (!out.noise_maps[j].empty()) {
      write_raw_array(dir / ("n" + k + ".f32"), out.noise_maps[j].cast<double>(),
                      {{"kind", "noise_map"}, {"tap", j + 1}});
    }
  }
}

}  // namespace telltale::evaluate
