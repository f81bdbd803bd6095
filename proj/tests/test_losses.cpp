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

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "telltale/error.hpp"
#include "telltale/losses.hpp"

using namespace telltale;
using losses::MapSet;

namespace {

struct Batch {
  std::vector<MapSet<double>> pred, gt;
};

// Three scales of h x w (halving), `channels` planes each.
Batch random_batch(std::mt19937_64& rng, int n, int h, int w, int channels, bool binary_gt,
                   bool prob_pred) {
  std::uniform_real_distribution<double> u(0.02, 0.98), v(-1.0, 1.0);
  std::bernoulli_distribution bit(0.5);
  Batch b;
  for (int i = 0; i < n; ++i) {
    MapSet<double> p, g;
    for (int j = 0; j < 3; ++j) {
      const int hh = std::max(1, h >> j), ww = std::max(1, w >> j);
      p[j] = Tensor<double>(channels, hh, ww);
      g[j] = Tensor<double>(channels, hh, ww);
      for (size_t k = 0; k < p[j].size(); ++k) {
        p[j][k] = prob_pred ? u(rng) : v(rng);
        g[j][k] = binary_gt ? (bit(rng) ? 1.0 : 0.0) : v(rng);
      }
    }
    b.pred.push_back(std::move(p));
    b.gt.push_back(std::move(g));
  }
  return b;
}

oracle::Maps to_maps(const std::vector<MapSet<double>>& m) {
  oracle::Maps out(m.size());
  for (size_t i = 0; i < m.size(); ++i) {
    out[i].resize(3);
    for (int j = 0; j < 3; ++j) {
      const auto& t = m[i][j];
      out[i][j].assign(t.channels() * t.height(), std::vector<double>(t.width()));
      for (int c = 0; c < t.channels(); ++c)
        for (int y = 0; y < t.height(); ++y)
          for (int x = 0; x < t.width(); ++x) out[i][j][c * t.height() + y][x] = t.at(c, y, x);
    }
  }
  return out;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace

TEST(ClassificationLoss, Examples) {
  std::vector<double> p = {0.5};
  std::vector<int> c = {1};
  EXPECT_NEAR(losses::classification_loss<double>(p, c), std::log(2.0), 1e-12);
  p = {1.0 - 1e-7};
  EXPECT_NEAR(losses::classification_loss<double>(p, c), 0.0, 1e-6);
  p = {0.0};
  EXPECT_TRUE(std::isfinite(losses::classification_loss<double>(p, c)));
  std::vector<double> mixed = {0.2, 0.9, 0.6, 0.05};
  std::vector<int> labels = {0, 1, 0, 1};
  EXPECT_NEAR(losses::classification_loss<double>(mixed, labels),
              oracle::binary_cross_entropy(mixed, labels), 1e-12);
}

TEST(ClassificationLoss, BinaryIsTwoClassCategorical) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> fake;
  std::vector<std::vector<double>> probs;
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) {
    fake.push_back(u(rng));
    probs.push_back({1.0 - fake.back(), fake.back()});
    labels.push_back(i % 2);
  }
  EXPECT_NEAR(losses::categorical_loss<double>(probs, labels),
              losses::classification_loss<double>(fake, labels), 1e-12);
  EXPECT_NEAR(losses::categorical_loss<double>(probs, labels), oracle::cross_entropy(probs, labels),
              1e-12);
}

TEST(CategoricalLogitGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.5);
  for (int K : {2, 5}) {
    std::vector<std::vector<double>> logits(3, std::vector<double>(K));
    for (auto& l : logits)
      for (double& v : l) v = z(rng);
    std::vector<int> labels = {0, K - 1, 1};
    auto softmax = [](const std::vector<double>& l) {
      double m = *std::max_element(l.begin(), l.end()), s = 0;
      std::vector<double> p(l.size());
      for (size_t k = 0; k < l.size(); ++k) s += (p[k] = std::exp(l[k] - m));
      for (double& v : p) v /= s;
      return p;
    };
    auto loss = [&](const std::vector<std::vector<double>>& ls) {
      std::vector<std::vector<double>> probs;
      for (const auto& l : ls) probs.push_back(softmax(l));
      return oracle::cross_entropy(probs, labels);
    };
    std::vector<std::vector<double>> probs;
    for (const auto& l : logits) probs.push_back(softmax(l));
    const auto g = losses::categorical_logit_grad<double>(probs, labels);
    const double h = 1e-6;
    for (size_t i = 0; i < logits.size(); ++i) {
      for (int k = 0; k < K; ++k) {
        auto up = logits, down = logits;
        up[i][k] += h;
        down[i][k] -= h;
        const double fd = (loss(up) - loss(down)) / (2 * h);
        EXPECT_LT(rel_err(g[i][k], fd), 1e-4) << "i=" << i << " k=" << k;
      }
    }
  }
}

TEST(MaskLoss, Examples) {
  std::mt19937_64 rng(3);
  Batch b = random_batch(rng, 2, 4, 4, 1, true, true);
  for (auto& p : b.pred)
    for (auto& t : p) t.fill(0.5);
  EXPECT_NEAR(losses::mask_loss<double>(b.pred, b.gt), 3 * std::log(2.0), 1e-12);
  for (size_t i = 0; i < b.pred.size(); ++i) b.pred[i] = b.gt[i];
  EXPECT_NEAR(losses::mask_loss<double>(b.pred, b.gt), 0.0, 1e-5);
  Batch bad = random_batch(rng, 1, 4, 4, 1, true, true);
  bad.gt[0][1] = Tensor<double>(1, 3, 3);
  EXPECT_THROW(losses::mask_loss<double>(bad.pred, bad.gt), InvalidArgument);
}

TEST(MaskLoss, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Batch b = random_batch(rng, 1 + trial % 4, 2 + trial % 7, 2 + trial % 5, 1, trial % 2, true);
    EXPECT_NEAR(losses::mask_loss<double>(b.pred, b.gt),
                oracle::mask_loss(to_maps(b.pred), to_maps(b.gt)), 1e-9);
  }
}

TEST(MaskLoss, ScaleSumStructure) {
  std::mt19937_64 rng(5);
  Batch b = random_batch(rng, 3, 8, 8, 1, true, true);
  const auto terms = losses::mask_loss_per_scale<double>(b.pred, b.gt);
  const double full = losses::mask_loss<double>(b.pred, b.gt);
  EXPECT_NEAR(full, terms[0] + terms[1] + terms[2], 1e-12);
  // A perfect scale contributes (almost) nothing.
  for (size_t i = 0; i < b.pred.size(); ++i) b.pred[i][1] = b.gt[i][1];
  EXPECT_NEAR(losses::mask_loss<double>(b.pred, b.gt), terms[0] + terms[2], 1e-5);
}

TEST(MaskLoss, PermutationInvariant) {
  std::mt19937_64 rng(6);
  Batch b = random_batch(rng, 4, 4, 4, 1, true, true);
  const double before = losses::mask_loss<double>(b.pred, b.gt);
  std::swap(b.pred[0], b.pred[3]);
  std::swap(b.gt[0], b.gt[3]);
  EXPECT_NEAR(losses::mask_loss<double>(b.pred, b.gt), before, 1e-12);
}

TEST(MaskLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  Batch b = random_batch(rng, 2, 4, 4, 1, false, true);
  for (auto& g : b.gt)
    for (auto& t : g)
      for (double& v : t.data()) v = std::abs(v);  // soft targets in [0, 1]
  const auto grads = losses::mask_loss_grad<double>(b.pred, b.gt);
  const double h = 1e-6;
  for (size_t i = 0; i < b.pred.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      for (size_t k = 0; k < b.pred[i][j].size(); ++k) {
        auto up = b.pred, down = b.pred;
        up[i][j][k] += h;
        down[i][j][k] -= h;
        const double fd =
            (losses::mask_loss<double>(up, b.gt) - losses::mask_loss<double>(down, b.gt)) / (2 * h);
        EXPECT_LT(rel_err(grads[i][j][k], fd), 1e-4);
      }
    }
  }
}

TEST(NoiseLoss, Examples) {
  std::mt19937_64 rng(8);
  Batch b = random_batch(rng, 2, 8, 8, 3, false, false);
  EXPECT_EQ(losses::noise_loss<double>(b.gt, b.gt), 0.0);
  auto shifted = b.gt;
  for (auto& s : shifted)
    for (auto& t : s)
      for (double& v : t.data()) v += 0.25;
  EXPECT_NEAR(losses::noise_loss<double>(shifted, b.gt), 3 * 0.25, 1e-12);
}

TEST(NoiseLoss, MatchesElementwiseOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Batch b = random_batch(rng, 1 + trial % 4, 2 + trial % 7, 2 + trial % 3, 3, false, false);
    EXPECT_NEAR(losses::noise_loss<double>(b.pred, b.gt, losses::Reduction::kMean),
                oracle::noise_loss(to_maps(b.pred), to_maps(b.gt), true), 1e-9);
    EXPECT_NEAR(losses::noise_loss<double>(b.pred, b.gt, losses::Reduction::kSum),
                oracle::noise_loss(to_maps(b.pred), to_maps(b.gt), false), 1e-9);
  }
}

TEST(NoiseLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  Batch b = random_batch(rng, 2, 4, 4, 3, false, false);
  for (auto reduction : {losses::Reduction::kMean, losses::Reduction::kSum}) {
    const auto grads = losses::noise_loss_grad<double>(b.pred, b.gt, reduction);
    const double h = 1e-6;  // far smaller than any |pred - gt| here
    for (size_t i = 0; i < b.pred.size(); ++i) {
      for (int j = 0; j < 3; ++j) {
        for (size_t k = 0; k < b.pred[i][j].size(); ++k) {
          auto up = b.pred, down = b.pred;
          up[i][j][k] += h;
          down[i][j][k] -= h;
          const double fd = (losses::noise_loss<double>(up, b.gt, reduction) -
                             losses::noise_loss<double>(down, b.gt, reduction)) /
                            (2 * h);
          EXPECT_LT(rel_err(grads[i][j][k], fd), 1e-4);
        }
      }
    }
  }
}

TEST(TotalLoss, Examples) {
  EXPECT_DOUBLE_EQ(losses::total_loss(0.7, 0.5, 0.25, 0, 0).total, 0.7);
  EXPECT_NEAR(losses::total_loss(0.7, 0.5, 0.25, 1, 2).total, 1.7, 1e-12);
  EXPECT_THROW(losses::total_loss(0.7, 0.5, 0.25, -1, 2), InvalidArgument);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 3);
  for (int i = 0; i < 100; ++i) {
    const double c = u(rng), n = u(rng), m = u(rng), l1 = u(rng), l2 = u(rng);
    const auto b = losses::total_loss(c, n, m, l1, l2);
    EXPECT_NEAR(b.total, c + l1 * n + l2 * m, 1e-9);
  }
}
