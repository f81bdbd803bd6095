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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "telltale/error.hpp"
#include "telltale/maskgen.hpp"
#include "telltale/trainer.hpp"

using namespace telltale;
using namespace telltale::trainer;

namespace {

net::ModelConfig small_model() {
  net::ModelConfig cfg;
  cfg.input_size = 32;
  cfg.stem_channels = 8;
  cfg.backbone_channels = {8, 16, 16};
  cfg.head_channels = 8;
  cfg.classifier_hidden = 16;
  return cfg;
}

// Fakes carry a block-aligned rectangle with a distinct texture; reals do not.
data::PreparedSample make_sample(int index, bool fake, int size = 32) {
  std::mt19937_64 rng(1000 + index);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  data::PreparedSample s;
  s.id = "s" + std::to_string(index);
  s.label = fake ? 1 : 0;
  s.binary = s.label;
  s.has_mask = true;
  s.input = Tensor<float>(3, size, size);
  s.mask = Plane(1, size, size);
  const int y0 = 16 * (index % 2), x0 = 16 * ((index / 2) % 2);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const bool inside = fake && y >= y0 && y < y0 + 16 && x >= x0 && x < x0 + 16;
        const double base = 0.3 * std::sin(0.4 * x + 0.3 * y + c) + 0.2 * u(rng);
        s.input.at(c, y, x) = static_cast<float>(inside ? base + 0.6 * u(rng) * 2 : base);
        if (c == 0 && inside) s.mask.at(0, y, x) = 1.0;
      }
    }
  }
  const int strides[3] = {4, 8, 16};
  for (int j = 0; j < 3; ++j) {
    const int h = size / strides[j];
    s.mask_targets[j] = maskgen::align_mask(s.mask, h, h).cast<float>();
    s.noise_targets[j] = Tensor<float>(3, h, h);
    for (float& v : s.noise_targets[j].data()) v = static_cast<float>(0.01 * u(rng));
  }
  return s;
}

std::vector<data::PreparedSample> make_set(int n, int offset = 0) {
  std::vector<data::PreparedSample> out;
  for (int i = 0; i < n; ++i) out.push_back(make_sample(offset + i, i % 2 == 1));
  return out;
}

std::vector<const data::PreparedSample*> pointers(const std::vector<data::PreparedSample>& v) {
  std::vector<const data::PreparedSample*> p;
  for (const auto& s : v) p.push_back(&s);
  return p;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs_step1 = 1;
  cfg.epochs_step2 = 1;
  cfg.real_replication_factor = 1;
  cfg.seed = 3;
  return cfg;
}

Checkpoint ck(int epoch, std::optional<double> auc) {
  Checkpoint c;
  c.epoch = epoch;
  c.val_auc = auc;
  return c;
}

}  // namespace

TEST(BuildEpoch, ReplicatesRealsOnly) {
  const std::vector<int> labels = {0, 1, 1, 0, 1};
  const auto order = build_epoch(labels, 4, 7, 0);
  ASSERT_EQ(order.size(), 11u);
  std::map<size_t, int> counts;
  for (size_t i : order) ++counts[i];
  EXPECT_EQ(counts[0], 4);
  EXPECT_EQ(counts[3], 4);
  EXPECT_EQ(counts[1], 1);
  EXPECT_EQ(counts[2], 1);
  EXPECT_EQ(counts[4], 1);
  EXPECT_EQ(build_epoch(labels, 1, 7, 0).size(), 5u);
  EXPECT_THROW(build_epoch(labels, 0, 7, 0), InvalidArgument);
  EXPECT_TRUE(build_epoch({}, 4, 7, 0).empty());
}

TEST(BuildEpoch, DeterministicPerSeedAndEpoch) {
  std::vector<int> labels(40);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3 == 0);
  EXPECT_EQ(build_epoch(labels, 4, 1, 2), build_epoch(labels, 4, 1, 2));
  EXPECT_NE(build_epoch(labels, 4, 1, 2), build_epoch(labels, 4, 1, 3));
  EXPECT_NE(build_epoch(labels, 4, 1, 2), build_epoch(labels, 4, 2, 2));
}

TEST(SelectCheckpoint, Examples) {
  const std::vector<Checkpoint> a = {ck(0, 0.8), ck(1, 0.9), ck(2, 0.85)};
  EXPECT_EQ(select_checkpoint(a), 1u);
  const std::vector<Checkpoint> tie = {ck(0, 0.7), ck(1, 0.9), ck(2, 0.9)};
  EXPECT_EQ(select_checkpoint(tie), 1u);
  const std::vector<Checkpoint> partial = {ck(0, std::nullopt), ck(1, 0.5), ck(2, std::nullopt)};
  EXPECT_EQ(select_checkpoint(partial), 1u);
  const std::vector<Checkpoint> none = {ck(0, std::nullopt), ck(1, std::nullopt)};
  EXPECT_EQ(select_checkpoint(none), 1u);
  EXPECT_THROW(select_checkpoint(std::span<const Checkpoint>{}), InvalidArgument);
}

TEST(Adam, MatchesReferenceUpdate) {
  TrainConfig cfg;
  cfg.lr = 1e-2;
  cfg.weight_decay = 0.1;
  const std::vector<double> start = {0.5, -1.0, 2.0, 0.0};
  std::vector<float> p(start.begin(), start.end());
  std::vector<double> ref = start, m(4, 0), v(4, 0);
  Adam adam(4, cfg);
  const std::vector<std::pair<size_t, size_t>> ranges = {{0, 3}};  // last entry frozen
  for (int t = 1; t <= 5; ++t) {
    std::vector<float> g = {0.1f * t, -0.3f, 1.0f / t, 7.0f};
    adam.step(p, g, ranges);
    for (size_t i = 0; i < 3; ++i) {
      const double gi = g[i] + cfg.weight_decay * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps);
    }
  }
  for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], ref[i], 1e-5);
  EXPECT_EQ(p[3], 0.0f);
  EXPECT_EQ(adam.steps(), 5);
  std::vector<float> wrong(3);
  EXPECT_THROW(adam.step(wrong, wrong, ranges), InvalidArgument);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lr = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.sigma_hq = 60;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.real_replication_factor = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.lambda1 = -1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Trainer, StageOneLeavesNoiseParametersBitUnchanged) {
  net::Model<float> model(small_model());
  model.initialize(1);
  const auto before = model.parameters().values();
  const auto train = make_set(8), val = make_set(4, 100);
  train_step1(model, train, val, quick_config());
  const auto& after = model.parameters().values();
  bool other_moved = false;
  for (const auto& slot : model.parameters().slots()) {
    const bool noise =
        slot.group == nn::Group::kNoiseHead || slot.group == nn::Group::kNoiseAlign;
    for (size_t i = slot.offset; i < slot.offset + slot.size; ++i) {
      if (noise) {
        ASSERT_EQ(before[i], after[i]) << slot.name;
      } else if (before[i] != after[i]) {
        other_moved = true;
      }
    }
  }
  EXPECT_TRUE(other_moved);
}

TEST(Trainer, DeterministicAcrossRunsAndWorkerCounts) {
  const auto train = make_set(8), val = make_set(4, 100);
  std::vector<std::vector<float>> results;
  for (int workers : {1, 3}) {
    net::Model<float> model(small_model());
    model.initialize(2);
    auto cfg = quick_config();
    cfg.workers = workers;
    std::vector<double> totals;
    train_step1(model, train, val, cfg);
    train_step2(model, train, val, cfg,
                [&](const nlohmann::json& j) { totals.push_back(j.at("total").get<double>()); });
    EXPECT_EQ(totals.size(), 2u);
    results.push_back(model.parameters().values());
  }
  EXPECT_EQ(results[0], results[1]);
}

TEST(Trainer, ZeroMaskWeightEqualsDisabledMapSupervision) {
  const auto train = make_set(8), val = make_set(4, 100);
  auto run = [&](double lambda2, bool supervision) {
    net::Model<float> model(small_model());
    model.initialize(4);
    auto cfg = quick_config();
    cfg.lambda2 = lambda2;
    cfg.map_supervision = supervision;
    train_step2(model, train, val, cfg);
    return model.parameters().values();
  };
  EXPECT_EQ(run(0.0, true), run(1.0, false));
}

TEST(Trainer, RejectsBadData) {
  net::Model<float> model(small_model());
  model.initialize(5);
  Trainer t(model, quick_config());
  const auto train = make_set(4);
  std::vector<data::PreparedSample> reals = {make_sample(0, false), make_sample(2, false)};
  EXPECT_THROW(t.run_stage(Stage::kStep1, {}, train), DataError);
  EXPECT_THROW(t.run_stage(Stage::kStep1, train, reals), DataError);
  auto broken = make_set(2);
  broken[1].has_mask = false;
  Adam adam(model.parameters().size(), quick_config());
  EXPECT_THROW(t.train_batch(Stage::kStep2, pointers(broken), adam), DataError);
  EXPECT_THROW(t.train_batch(Stage::kStep2, {}, adam), InvalidArgument);
}

TEST(Trainer, NoiseLossOnlyInStepTwo) {
  net::Model<float> model(small_model());
  model.initialize(6);
  Trainer t(model, quick_config());
  const auto batch = make_set(4);
  const auto l1 = t.evaluate_loss(Stage::kStep1, pointers(batch));
  const auto l2 = t.evaluate_loss(Stage::kStep2, pointers(batch));
  EXPECT_EQ(l1.lambda1, 0.0);
  EXPECT_EQ(l2.lambda1, 1.0);
  EXPECT_NEAR(l2.total, l2.classification + l2.noise + l2.mask, 1e-9);
  EXPECT_NEAR(l1.total, l1.classification + l1.mask, 1e-9);
  EXPECT_GT(l2.noise, 0.0);
}

TEST(Trainer, OneEpochDescends) {
  net::Model<float> model(small_model());
  model.initialize(7);
  auto cfg = quick_config();
  cfg.lr = 1e-3;
  cfg.batch_size = 8;
  Trainer t(model, cfg);
  const auto batch = make_set(8);
  const auto p = pointers(batch);
  const double before = t.evaluate_loss(Stage::kStep2, p).total;
  Adam adam(model.parameters().size(), cfg);
  const auto ranges = trainable_ranges(model.parameters(), Stage::kStep2);
  size_t covered = 0;
  for (const auto& r : ranges) covered += r.second;
  EXPECT_EQ(covered, model.parameters().size());
  t.train_batch(Stage::kStep2, p, adam);
  EXPECT_LT(t.evaluate_loss(Stage::kStep2, p).total, before);
}

TEST(Trainer, MemorizesSmallSet) {
  net::Model<float> model(small_model());
  model.initialize(8);
  auto cfg = quick_config();
  cfg.lr = 1e-3;
  cfg.weight_decay = 0;
  Trainer t(model, cfg);
  const auto batch = make_set(8);
  const auto p = pointers(batch);
  const double before = t.evaluate_loss(Stage::kStep2, p).total;
  Adam adam(model.parameters().size(), cfg);
  for (int step = 0; step < 200; ++step) t.train_batch(Stage::kStep2, p, adam);
  const auto after = t.evaluate_loss(Stage::kStep2, p);
  EXPECT_LT(after.total, 0.1 * before) << "before " << before << " after " << after.total;
  const auto scores = t.fake_scores(batch);
  for (size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(scores[i] > 0.5, batch[i].binary == 1) << i;
  }
}

TEST(Trainer, SelectsBestEpochAndRestoresIt) {
  net::Model<float> model(small_model());
  model.initialize(9);
  auto cfg = quick_config();
  cfg.epochs_step1 = 3;
  std::vector<EpochRecord> records;
  Trainer t(model, cfg);
  t.set_epoch_logger([&](const EpochRecord& r) { records.push_back(r); });
  const auto train = make_set(8), val = make_set(4, 100);
  const auto result = t.run_stage(Stage::kStep1, train, val);
  ASSERT_EQ(result.checkpoints.size(), 3u);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(result.selected, select_checkpoint(result.checkpoints));
  EXPECT_EQ(model.parameters().values(), result.checkpoints[result.selected].weights);
  EXPECT_EQ(records[2].to_json().at("epoch"), 2);
  EXPECT_EQ(result.step_losses.size(), 6u);
}
