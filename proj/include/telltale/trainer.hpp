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

// Two-step training. Step 1 fits the backbone, semantic heads, semantic
// align blocks and classifier on L_c + lambda2 * L_b with the noise stream
// switched off; step 2 fits every parameter on the full objective. After each
// epoch the validation AUC is recorded and the best epoch's weights are
// restored when the step ends.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "telltale/dataset.hpp"
#include "telltale/losses.hpp"
#include "telltale/net.hpp"

namespace telltale::trainer {

struct TrainConfig {
  double lr = 2e-4;
  double weight_decay = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int epochs_step1 = 30;
  int epochs_step2 = 50;
  uint64_t seed = 0;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double sigma_hq = 5.0;
  double sigma_lq = 10.0;
  int real_replication_factor = 4;
  losses::Reduction noise_reduction = losses::Reduction::kMean;
  // Off drops the mask term from the gradient entirely (not just weights it by zero).
  bool map_supervision = true;
  int workers = 0;  // 0 = data::worker_count()

  void validate() const;
};

enum class Stage { kStep1 = 1, kStep2 = 2 };

struct Checkpoint {
  Stage stage = Stage::kStep1;
  int epoch = 0;  // 0-based within the stage
  std::optional<double> val_auc;
  std::vector<float> weights;
};

struct EpochRecord {
  Stage stage = Stage::kStep1;
  int epoch = 0;
  losses::LossBundle mean_loss;
  std::optional<double> val_auc;
  nlohmann::json to_json() const;
};

struct StageResult {
  std::vector<EpochRecord> epochs;
  std::vector<Checkpoint> checkpoints;
  size_t selected = 0;  // index into checkpoints
  std::vector<losses::LossBundle> step_losses;
};

// Called once per optimizer step with {step, L_c, L_n, L_b, total}.
using StepLogger = std::function<void(const nlohmann::json&)>;
using EpochLogger = std::function<void(const EpochRecord&)>;

// Highest val_auc, earliest epoch on ties. Checkpoints without a validation
// score lose to any scored one; if none is scored the last wins. Throws
// InvalidArgument on an empty list.
size_t select_checkpoint(std::span<const Checkpoint> checkpoints);

// Sample order for one epoch: every real index `replication` times, fakes
// once, shuffled by a generator seeded with (seed, epoch). The trainer
// folds the stage into the high bits of `epoch`.
std::vector<size_t> build_epoch(std::span<const int> binary_labels, int replication, uint64_t seed,
                                uint64_t epoch);

// PyTorch-style Adam with L2 weight decay added to the gradient. Only the
// given [offset, offset + size) ranges are touched.
class Adam {
 public:
  Adam(size_t size, const TrainConfig& cfg);
  void step(std::span<float> params, std::span<const float> grads,
            std::span<const std::pair<size_t, size_t>> ranges);
  int steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, wd_;
  int t_ = 0;
  std::vector<float> m_, v_;
};

// Parameter ranges optimized in a stage.
std::vector<std::pair<size_t, size_t>> trainable_ranges(const nn::ParameterStore<float>& store,
                                                        Stage stage);

class Trainer {
 public:
  Trainer(net::Model<float>& model, TrainConfig cfg);

  void set_step_logger(StepLogger logger) { step_logger_ = std::move(logger); }
  void set_epoch_logger(EpochLogger logger) { epoch_logger_ = std::move(logger); }

  // Throws DataError on an empty training set, fakes without masks or a
  // single-class validation set; NumericalError on a non-finite loss.
  StageResult run_stage(Stage stage, std::span<const data::PreparedSample> train,
                        std::span<const data::PreparedSample> val);

  // One optimizer step on a batch; returns the batch loss.
  losses::LossBundle train_batch(Stage stage, std::span<const data::PreparedSample* const> batch,
                                 Adam& optimizer);

  // Mean loss of a batch without touching the weights.
  losses::LossBundle evaluate_loss(Stage stage,
                                   std::span<const data::PreparedSample* const> batch) const;

  // P(fake) per sample: probs[1] for two classes, 1 - probs[0] otherwise.
  std::vector<double> fake_scores(std::span<const data::PreparedSample> samples,
                                  Stage stage = Stage::kStep2) const;

  const TrainConfig& config() const { return cfg_; }

 private:
  struct BatchPass;
  BatchPass forward_batch(Stage stage, std::span<const data::PreparedSample* const> batch) const;
  losses::LossBundle batch_losses(BatchPass& pass, std::span<const data::PreparedSample* const> batch,
                                  Stage stage, bool with_grads) const;

  net::Model<float>& model_;
  TrainConfig cfg_;
  StepLogger step_logger_;
  EpochLogger epoch_logger_;
  long step_ = 0;
};

StageResult train_step1(net::Model<float>& model, std::span<const data::PreparedSample> train,
                        std::span<const data::PreparedSample> val, const TrainConfig& cfg,
                        const StepLogger& logger = {});
StageResult train_step2(net::Model<float>& model, std::span<const data::PreparedSample> train,
                        std::span<const data::PreparedSample> val, const TrainConfig& cfg,
                        const StepLogger& logger = {});

}  // namespace telltale::trainer
