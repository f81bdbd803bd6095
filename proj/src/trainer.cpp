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

#include "telltale/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "telltale/error.hpp"
#include "telltale/metrics.hpp"

namespace telltale::trainer {
namespace {

bool trained_in(nn::Group group, Stage stage) {
  if (stage == Stage::kStep2) return true;
  return group != nn::Group::kNoiseHead && group != nn::Group::kNoiseAlign;
}

net::ForwardOptions forward_options(Stage stage) {
  net::ForwardOptions opt;
  opt.noise_stream = stage == Stage::kStep2;
  return opt;
}

void require_finite_loss(const losses::LossBundle& b) {
  if (!std::isfinite(b.total) || !std::isfinite(b.classification) || !std::isfinite(b.noise) ||
      !std::isfinite(b.mask)) {
    throw NumericalError("non-finite training loss");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0)) throw InvalidArgument("lr must be > 0");
  if (!(weight_decay >= 0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw InvalidArgument("adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0)) throw InvalidArgument("adam_eps must be > 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (epochs_step1 < 0 || epochs_step2 < 0) throw InvalidArgument("epoch counts must be >= 0");
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw InvalidArgument("loss weights must be >= 0");
  if (!(sigma_hq >= 0 && sigma_hq <= 50) || !(sigma_lq >= 0 && sigma_lq <= 50)) {
    throw InvalidArgument("sigma must be in [0, 50]");
  }
  if (real_replication_factor < 1) throw InvalidArgument("real_replication_factor must be >= 1");
  if (workers < 0) throw InvalidArgument("workers must be >= 0");
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["stage"] = static_cast<int>(stage);
  j["epoch"] = epoch;
  j["L_c"] = mean_loss.classification;
  j["L_n"] = mean_loss.noise;
  j["L_b"] = mean_loss.mask;
  j["total"] = mean_loss.total;
  j["val_auc"] = val_auc ? nlohmann::json(*val_auc) : nlohmann::json(nullptr);
  return j;
}

size_t select_checkpoint(std::span<const Checkpoint> checkpoints) {
  if (checkpoints.empty()) throw InvalidArgument("select_checkpoint: empty list");
  std::optional<size_t> best;
  for (size_t i = 0; i < checkpoints.size(); ++i) {
    const auto& c = checkpoints[i];
    if (!c.val_auc) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = checkpoints[*best];
    if (*c.val_auc > *b.val_auc || (*c.val_auc == *b.val_auc && c.epoch < b.epoch)) best = i;
  }
  return best ? *best : checkpoints.size() - 1;
}

std::vector<size_t> build_epoch(std::span<const int> binary_labels, int replication, uint64_t seed,
                                uint64_t epoch) {
  if (replication < 1) throw InvalidArgument("replication must be >= 1");
  std::vector<size_t> order;
  for (size_t i = 0; i < binary_labels.size(); ++i) {
    const int copies = binary_labels[i] == 0 ? replication : 1;
    for (int k = 0; k < copies; ++k) order.push_back(i);
  }
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(epoch), static_cast<uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (size_t i = order.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Adam::Adam(size_t size, const TrainConfig& cfg)
    : lr_(cfg.lr),
      beta1_(cfg.adam_beta1),
      beta2_(cfg.adam_beta2),
      eps_(cfg.adam_eps),
      wd_(cfg.weight_decay),
      m_(size, 0.0f),
      v_(size, 0.0f) {}

void Adam::step(std::span<float> params, std::span<const float> grads,
                std::span<const std::pair<size_t, size_t>> ranges) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw InvalidArgument("Adam: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const float step = static_cast<float>(lr_ / c1);
  const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  const float eps = static_cast<float>(eps_), wd = static_cast<float>(wd_);
  for (const auto& [offset, size] : ranges) {
    for (size_t i = offset; i < offset + size; ++i) {
      const float g = grads[i] + wd * params[i];
      m_[i] = b1 * m_[i] + (1.0f - b1) * g;
      v_[i] = b2 * v_[i] + (1.0f - b2) * g * g;
      params[i] -= step * m_[i] / (std::sqrt(v_[i]) * inv_sqrt_c2 + eps);
    }
  }
}

std::vector<std::pair<size_t, size_t>> trainable_ranges(const nn::ParameterStore<float>& store,
                                                        Stage stage) {
  std::vector<std::pair<size_t, size_t>> ranges;
  for (const auto& slot : store.slots()) {
    if (!trained_in(slot.group, stage)) continue;
    if (!ranges.empty() && ranges.back().first + ranges.back().second == slot.offset) {
      ranges.back().second += slot.size;
    } else {
      ranges.emplace_back(slot.offset, slot.size);
    }
  }
  return ranges;
}

struct Trainer::BatchPass {
  std::vector<net::Model<float>::Output> outputs;
  std::vector<net::Model<float>::OutputGrads> grads;
};

Trainer::Trainer(net::Model<float>& model, TrainConfig cfg) : model_(model), cfg_(std::move(cfg)) {
  cfg_.validate();
}

Trainer::BatchPass Trainer::forward_batch(Stage stage,
                                          std::span<const data::PreparedSample* const> batch) const {
  BatchPass pass;
  pass.outputs.resize(batch.size());
  const int workers = cfg_.workers > 0 ? cfg_.workers : data::worker_count();
  const auto options = forward_options(stage);
  data::parallel_for(batch.size(), workers, [&](size_t i) {
    pass.outputs[i] = model_.forward(batch[i]->input, options);
  });
  return pass;
}

losses::LossBundle Trainer::batch_losses(BatchPass& pass,
                                         std::span<const data::PreparedSample* const> batch,
                                         Stage stage, bool with_grads) const {
  const size_t n = batch.size();
  const bool binary = model_.config().num_classes == 2;
  std::vector<std::vector<float>> probs(n);
  std::vector<int> labels(n);
  std::vector<losses::MapSet<float>> seg_pred(n), seg_gt(n), noise_pred, noise_gt;
  const bool noise = stage == Stage::kStep2;
  if (noise) {
    noise_pred.resize(n);
    noise_gt.resize(n);
  }
  for (size_t i = 0; i < n; ++i) {
    const auto& s = *batch[i];
    if (!s.has_mask) throw DataError(s.id + ": manipulated sample has no mask or pair");
    probs[i] = pass.outputs[i].probs;
    labels[i] = binary ? s.binary : s.label;
    seg_pred[i] = pass.outputs[i].seg_maps;
    seg_gt[i] = s.mask_targets;
    if (noise) {
      if (s.noise_targets[0].empty()) throw DataError(s.id + ": missing noise targets");
      noise_pred[i] = pass.outputs[i].noise_maps;
      noise_gt[i] = s.noise_targets;
    }
  }
  const double l_c = losses::categorical_loss<float>(probs, labels);
  const double l_b = losses::mask_loss<float>(seg_pred, seg_gt);
  const double l_n = noise ? losses::noise_loss<float>(noise_pred, noise_gt, cfg_.noise_reduction) : 0.0;
  const double lambda1 = noise ? cfg_.lambda1 : 0.0;
  losses::LossBundle bundle = losses::total_loss(l_c, l_n, l_b, lambda1, cfg_.lambda2);
  if (!cfg_.map_supervision) bundle.total = l_c + lambda1 * l_n;
  require_finite_loss(bundle);
  if (!with_grads) return bundle;

  pass.grads.assign(n, {});
  const auto d_logits = losses::categorical_logit_grad<float>(probs, labels);
  for (size_t i = 0; i < n; ++i) pass.grads[i].logits = d_logits[i];
  if (cfg_.map_supervision) {
    auto d_seg = losses::mask_loss_grad<float>(seg_pred, seg_gt);
    const float w = static_cast<float>(cfg_.lambda2);
    for (size_t i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (float& v : d_seg[i][j].data()) v *= w;
        pass.grads[i].seg_maps[j] = std::move(d_seg[i][j]);
      }
    }
  }
  if (noise) {
    auto d_noise = losses::noise_loss_grad<float>(noise_pred, noise_gt, cfg_.noise_reduction);
    const float w = static_cast<float>(lambda1);
    for (size_t i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (float& v : d_noise[i][j].data()) v *= w;
        pass.grads[i].noise_maps[j] = std::move(d_noise[i][j]);
      }
    }
  }
  return bundle;
}

losses::LossBundle Trainer::train_batch(Stage stage,
                                        std::span<const data::PreparedSample* const> batch,
                                        Adam& optimizer) {
  if (batch.empty()) throw InvalidArgument("train_batch: empty batch");
  BatchPass pass = forward_batch(stage, batch);
  const losses::LossBundle bundle = batch_losses(pass, batch, stage, true);

  // Per-sample gradients, then a fixed-order sum: the result does not depend
  // on the worker count.
  auto& store = model_.parameters();
  const size_t p = store.size();
  std::vector<std::vector<float>> per_sample(batch.size());
  const int workers = cfg_.workers > 0 ? cfg_.workers : data::worker_count();
  data::parallel_for(batch.size(), workers, [&](size_t i) {
    per_sample[i].assign(p, 0.0f);
    model_.backward(pass.outputs[i], pass.grads[i], per_sample[i]);
    pass.outputs[i] = {};
  });
  std::vector<float> grads = std::move(per_sample[0]);
  for (size_t i = 1; i < per_sample.size(); ++i) {
    for (size_t k = 0; k < p; ++k) grads[k] += per_sample[i][k];
    per_sample[i] = {};
  }
  for (float g : grads) {
    if (!std::isfinite(g)) throw NumericalError("non-finite gradient");
  }
  const auto ranges = trainable_ranges(store, stage);
  optimizer.step(store.values(), grads, ranges);

  if (step_logger_) {
    nlohmann::ordered_json j;
    j["step"] = step_;
    j["L_c"] = bundle.classification;
    j["L_n"] = bundle.noise;
    j["L_b"] = bundle.mask;
    j["total"] = bundle.total;
    step_logger_(j);
  }
  ++step_;
  return bundle;
}

losses::LossBundle Trainer::evaluate_loss(Stage stage,
                                          std::span<const data::PreparedSample* const> batch) const {
  if (batch.empty()) throw InvalidArgument("evaluate_loss: empty batch");
  BatchPass pass = forward_batch(stage, batch);
  return batch_losses(pass, batch, stage, false);
}

std::vector<double> Trainer::fake_scores(std::span<const data::PreparedSample> samples,
                                         Stage stage) const {
  std::vector<double> scores(samples.size());
  const int workers = cfg_.workers > 0 ? cfg_.workers : data::worker_count();
  const auto options = forward_options(stage);
  data::parallel_for(samples.size(), workers, [&](size_t i) {
    const auto out = model_.forward(samples[i].input, options);
    scores[i] = out.probs.size() == 2 ? out.probs[1] : 1.0 - out.probs[0];
  });
  return scores;
}

StageResult Trainer::run_stage(Stage stage, std::span<const data::PreparedSample> train,
                               std::span<const data::PreparedSample> val) {
  if (train.empty()) throw DataError("empty training set");
  if (!val.empty()) {
    bool has_real = false, has_fake = false;
    for (const auto& s : val) (s.binary ? has_fake : has_real) = true;
    if (!has_real || !has_fake) throw DataError("validation set is single-class");
  }
  const int epochs = stage == Stage::kStep1 ? cfg_.epochs_step1 : cfg_.epochs_step2;
  std::vector<int> labels;
  for (const auto& s : train) labels.push_back(s.binary);

  StageResult result;
  Adam optimizer(model_.parameters().size(), cfg_);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto order = build_epoch(labels, cfg_.real_replication_factor, cfg_.seed,
                                   (static_cast<uint64_t>(stage) << 32) | static_cast<uint64_t>(epoch));
    losses::LossBundle sum;
    sum.lambda1 = stage == Stage::kStep2 ? cfg_.lambda1 : 0.0;
    sum.lambda2 = cfg_.lambda2;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg_.batch_size));
      std::vector<const data::PreparedSample*> batch;
      for (size_t k = start; k < end; ++k) batch.push_back(&train[order[k]]);
      const auto b = train_batch(stage, batch, optimizer);
      result.step_losses.push_back(b);
      sum.classification += b.classification;
      sum.noise += b.noise;
      sum.mask += b.mask;
      sum.total += b.total;
      ++batches;
    }
    EpochRecord rec;
    rec.stage = stage;
    rec.epoch = epoch;
    rec.mean_loss = sum;
    rec.mean_loss.classification /= batches;
    rec.mean_loss.noise /= batches;
    rec.mean_loss.mask /= batches;
    rec.mean_loss.total /= batches;
    if (!val.empty()) {
      const auto scores = fake_scores(val, stage);
      std::vector<metrics::ScoredSample> scored;
      for (size_t i = 0; i < val.size(); ++i) scored.push_back({scores[i], val[i].binary});
      rec.val_auc = metrics::roc_auc(scored);
    }
    if (epoch_logger_) epoch_logger_(rec);
    result.epochs.push_back(rec);
    Checkpoint ck;
    ck.stage = stage;
    ck.epoch = epoch;
    ck.val_auc = rec.val_auc;
    ck.weights = model_.parameters().values();
    result.checkpoints.push_back(std::move(ck));
  }
  if (!result.checkpoints.empty()) {
    result.selected = select_checkpoint(result.checkpoints);
    model_.parameters().values() = result.checkpoints[result.selected].weights;
  }
  return result;
}

StageResult train_step1(net::Model<float>& model, std::span<const data::PreparedSample> train,
                        std::span<const data::PreparedSample> val, const TrainConfig& cfg,
                        const StepLogger& logger) {
  Trainer t(model, cfg);
  t.set_step_logger(logger);
  return t.run_stage(Stage::kStep1, train, val);
}

StageResult train_step2(net::Model<float>& model, std::span<const data::PreparedSample> train,
                        std::span<const data::PreparedSample> val, const TrainConfig& cfg,
                        const StepLogger& logger) {
  Trainer t(model, cfg);
  t.set_step_logger(logger);
  return t.run_stage(Stage::kStep2, train, val);
}

}  // namespace telltale::trainer
