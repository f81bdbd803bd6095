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
#include "telltale/metrics.hpp"

using namespace telltale;
using metrics::ScoredSample;

namespace {

Plane to_plane(const oracle::Grid& g) {
  Plane p(1, static_cast<int>(g.size()), static_cast<int>(g[0].size()));
  for (size_t y = 0; y < g.size(); ++y)
    for (size_t x = 0; x < g[y].size(); ++x) p.at(int(y), int(x)) = g[y][x];
  return p;
}

oracle::Grid random_grid(std::mt19937_64& rng, int h, int w, double density) {
  std::bernoulli_distribution on(density);
  oracle::Grid g(h, std::vector<int>(w));
  for (auto& row : g)
    for (int& v : row) v = on(rng);
  return g;
}

std::vector<ScoredSample> to_scored(const std::vector<oracle::Sample>& s) {
  std::vector<ScoredSample> out;
  for (const auto& x : s) out.push_back({x.score, x.label});
  return out;
}

// Scores on a coarse grid so ties are common.
std::vector<oracle::Sample> random_samples(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> level(0, 9);
  std::bernoulli_distribution fake(0.5);
  std::vector<oracle::Sample> s;
  for (int i = 0; i < n; ++i) s.push_back({level(rng) / 9.0, fake(rng) ? 1 : 0});
  s[0].label = 0;
  s[1].label = 1;
  return s;
}

}  // namespace

TEST(Iou, Examples) {
  const oracle::Grid a = {{1, 1}, {0, 0}}, b = {{0, 1}, {0, 1}};
  EXPECT_DOUBLE_EQ(metrics::iou(to_plane(a), to_plane(a)), 1.0);
  EXPECT_DOUBLE_EQ(metrics::iou(to_plane({{1, 0}, {0, 0}}), to_plane({{0, 0}, {0, 1}})), 0.0);
  EXPECT_DOUBLE_EQ(metrics::iou(to_plane(a), to_plane(b)), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(metrics::iou(to_plane({{0, 0}}), to_plane({{0, 0}})), 1.0);
}

TEST(Pbca, Examples) {
  const oracle::Grid a = {{1, 0}, {1, 0}};
  EXPECT_DOUBLE_EQ(metrics::pbca(to_plane(a), to_plane(a)), 1.0);
  EXPECT_DOUBLE_EQ(metrics::pbca(to_plane(a), to_plane({{0, 1}, {0, 1}})), 0.0);
  EXPECT_DOUBLE_EQ(metrics::pbca(to_plane(a), to_plane({{1, 0}, {1, 1}})), 0.75);
}

TEST(Iinc, Examples) {
  const oracle::Grid a = {{1, 1}, {0, 0}};
  EXPECT_DOUBLE_EQ(metrics::iinc(to_plane(a), to_plane(a)), 0.0);
  EXPECT_DOUBLE_EQ(metrics::iinc(to_plane(a), to_plane({{0, 0}, {1, 1}})), 1.0);
  // 4-pixel prediction containing a 2-pixel truth.
  EXPECT_DOUBLE_EQ(metrics::iinc(to_plane({{1, 1}, {1, 1}}), to_plane(a)), 0.25);
  EXPECT_DOUBLE_EQ(metrics::iinc(to_plane({{0, 0}}), to_plane({{0, 0}})), 0.0);
  EXPECT_DOUBLE_EQ(metrics::iinc(to_plane({{0, 1}}), to_plane({{0, 0}})), 1.0);
}

TEST(MaskMetrics, RejectBadInput) {
  EXPECT_THROW(metrics::iou(to_plane({{1, 0}}), to_plane({{1}, {0}})), InvalidArgument);
  Plane soft = to_plane({{1, 0}});
  soft[0] = 0.5;
  EXPECT_THROW(metrics::pbca(soft, to_plane({{1, 0}})), InvalidArgument);
}

TEST(MaskMetrics, MatchOracleOnRandomMasks) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> side(1, 10);
  std::uniform_real_distribution<double> dens(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = side(rng), w = side(rng);
    const auto p = random_grid(rng, h, w, dens(rng));
    const auto g = random_grid(rng, h, w, dens(rng));
    EXPECT_EQ(metrics::iou(to_plane(p), to_plane(g)), oracle::iou(p, g));
    EXPECT_EQ(metrics::pbca(to_plane(p), to_plane(g)), oracle::pbca(p, g));
    EXPECT_EQ(metrics::iinc(to_plane(p), to_plane(g)), oracle::iinc(p, g));
  }
}

TEST(MaskMetrics, PerfectOverlapEquivalence) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_grid(rng, 4, 4, 0.5);
    g[0][0] = 1;
    auto p = trial % 2 ? g : random_grid(rng, 4, 4, 0.5);
    const double i = metrics::iou(to_plane(p), to_plane(g));
    const double a = metrics::pbca(to_plane(p), to_plane(g));
    const double c = metrics::iinc(to_plane(p), to_plane(g));
    EXPECT_EQ(i == 1.0, a == 1.0);
    EXPECT_EQ(a == 1.0, c == 0.0);
  }
}

TEST(RocAuc, Examples) {
  std::vector<ScoredSample> s = {{0.1, 0}, {0.2, 0}, {0.8, 1}, {0.9, 1}};
  EXPECT_DOUBLE_EQ(metrics::roc_auc(s), 1.0);
  for (auto& x : s) x.label = 1 - x.label;
  EXPECT_DOUBLE_EQ(metrics::roc_auc(s), 0.0);
  // One inversion and one tie.
  const std::vector<oracle::Sample> six = {{0.1, 0}, {0.4, 0}, {0.35, 1},
                                           {0.6, 0}, {0.6, 1}, {0.9, 1}};
  EXPECT_NEAR(metrics::roc_auc(to_scored(six)), oracle::auc(six), 1e-12);
  EXPECT_NEAR(oracle::auc(six), 6.5 / 9.0, 1e-12);
}

TEST(RocAuc, SingleClassIsAnError) {
  std::vector<ScoredSample> s = {{0.1, 0}, {0.2, 0}};
  EXPECT_THROW(metrics::roc_auc(s), DataError);
  EXPECT_THROW(metrics::eer(s), DataError);
}

TEST(RocAuc, Properties) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = random_samples(rng, 30);
    auto scored = to_scored(s);
    const double auc = metrics::roc_auc(scored);
    EXPECT_NEAR(auc, oracle::auc(s), 1e-12);
    auto flipped = scored;
    for (auto& x : flipped) x.label = 1 - x.label;
    EXPECT_NEAR(auc + metrics::roc_auc(flipped), 1.0, 1e-12);
    auto warped = scored;
    for (auto& x : warped) x.score = std::exp(3 * x.score) - 7;
    EXPECT_NEAR(metrics::roc_auc(warped), auc, 1e-12);
  }
}

TEST(Eer, Examples) {
  EXPECT_DOUBLE_EQ(metrics::eer(std::vector<ScoredSample>{{0.1, 0}, {0.2, 0}, {0.8, 1}}), 0.0);
  EXPECT_DOUBLE_EQ(
      metrics::eer(std::vector<ScoredSample>{{0.5, 0}, {0.5, 1}, {0.5, 0}, {0.5, 1}}), 0.5);
  const std::vector<oracle::Sample> mixed = {{0.2, 0}, {0.7, 0}, {0.4, 1}, {0.9, 1}, {0.1, 0}};
  EXPECT_NEAR(metrics::eer(to_scored(mixed)), oracle::eer(mixed), 1e-12);
}

TEST(Eer, MatchesOracleAndStaysInRange) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_samples(rng, 2 + trial % 60);
    const double e = metrics::eer(to_scored(s));
    EXPECT_NEAR(e, oracle::eer(s), 1e-12);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
  }
}

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(
      metrics::average_precision(std::vector<ScoredSample>{{0.9, 1}, {0.8, 1}, {0.1, 0}}), 1.0);
  std::vector<ScoredSample> last = {{0.9, 0}, {0.8, 0}, {0.7, 0}, {0.6, 0}, {0.1, 1}};
  EXPECT_DOUBLE_EQ(metrics::average_precision(last), 1.0 / 5.0);
  EXPECT_THROW(metrics::average_precision(std::vector<ScoredSample>{{0.3, 0}}), DataError);
  // Ties keep input order.
  EXPECT_DOUBLE_EQ(metrics::average_precision(std::vector<ScoredSample>{{0.5, 0}, {0.5, 1}}), 0.5);
}

TEST(AveragePrecision, MatchesOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_samples(rng, 2 + trial % 90);
    EXPECT_NEAR(metrics::average_precision(to_scored(s)), oracle::average_precision(s), 1e-12);
  }
}

TEST(ConfusionRates, Examples) {
  auto perfect = metrics::confusion_rates(
      std::vector<ScoredSample>{{0.1, 0}, {0.2, 0}, {0.9, 1}, {0.7, 1}});
  EXPECT_DOUBLE_EQ(perfect.acc, 1.0);
  EXPECT_DOUBLE_EQ(*perfect.fpr, 0.0);
  EXPECT_DOUBLE_EQ(*perfect.fnr, 0.0);
  auto always = metrics::confusion_rates(
      std::vector<ScoredSample>{{0.9, 0}, {0.9, 0}, {0.9, 1}, {0.9, 1}});
  EXPECT_DOUBLE_EQ(always.acc, 0.5);
  EXPECT_DOUBLE_EQ(*always.fpr, 1.0);
  EXPECT_DOUBLE_EQ(*always.fnr, 0.0);
  auto reals_only = metrics::confusion_rates(std::vector<ScoredSample>{{0.2, 0}, {0.7, 0}});
  EXPECT_TRUE(reals_only.fpr.has_value());
  EXPECT_FALSE(reals_only.fnr.has_value());
}

TEST(ConfusionRates, MatchesOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_samples(rng, 2 + trial % 50);
    const auto got = metrics::confusion_rates(to_scored(s), 0.5);
    const auto want = oracle::confusion(s, 0.5);
    EXPECT_EQ(got.acc, want.acc);
    EXPECT_EQ(*got.fpr, want.fpr);
    EXPECT_EQ(*got.fnr, want.fnr);
  }
}

TEST(PerClassRecall, Examples) {
  std::vector<int> truth = {0, 1, 2, 3, 4, 0, 1};
  auto perfect = metrics::per_class_recall(truth, truth);
  for (const auto& r : perfect.recall) EXPECT_DOUBLE_EQ(*r, 1.0);
  std::vector<int> confused = truth;
  confused[2] = 0;  // class 2 fully confused
  auto r = metrics::per_class_recall(confused, truth);
  EXPECT_DOUBLE_EQ(*r.recall[2], 0.0);
  EXPECT_DOUBLE_EQ(*r.recall[1], 1.0);
  EXPECT_DOUBLE_EQ(r.average, 0.8);
  auto missing = metrics::per_class_recall(std::vector<int>{0, 1}, std::vector<int>{0, 1});
  EXPECT_FALSE(missing.recall[3].has_value());
}

TEST(PerClassRecall, MatchesRowNormalizedCounts) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> cls(0, 4);
  std::vector<int> pred, truth;
  for (int i = 0; i < 100; ++i) {
    truth.push_back(i < 5 ? i : cls(rng));
    pred.push_back(cls(rng));
  }
  int cm[5][5] = {};
  for (size_t i = 0; i < pred.size(); ++i) cm[truth[i]][pred[i]]++;
  auto r = metrics::per_class_recall(pred, truth);
  for (int k = 0; k < 5; ++k) {
    int row = 0;
    for (int j = 0; j < 5; ++j) row += cm[k][j];
    EXPECT_DOUBLE_EQ(*r.recall[k], static_cast<double>(cm[k][k]) / row);
  }
}

TEST(Curves, EndpointsAndShape) {
  std::vector<ScoredSample> s = {{0.1, 0}, {0.4, 1}, {0.4, 0}, {0.8, 1}};
  auto roc = metrics::roc_curve(s);
  ASSERT_EQ(roc.size(), 4u);
  EXPECT_EQ(roc.front().fpr, 0.0);
  EXPECT_EQ(roc.front().tpr, 0.0);
  EXPECT_EQ(roc.back().fpr, 1.0);
  EXPECT_EQ(roc.back().tpr, 1.0);
  auto pr = metrics::pr_curve(s);
  ASSERT_EQ(pr.size(), 3u);
  EXPECT_DOUBLE_EQ(pr[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(pr[1].precision, 2.0 / 3.0);
}

TEST(EvalReport, JsonRoundTrip) {
  metrics::EvalReport r = metrics::detection_report(
      std::vector<ScoredSample>{{0.1, 0}, {0.4, 1}, {0.6, 0}, {0.8, 1}});
  r.name = "run";
  r.localization = metrics::LocalizationReport{0.5, 0.9, 0.3, 2};
  const auto back = metrics::EvalReport::from_json(r.to_json());
  EXPECT_EQ(back.name, "run");
  EXPECT_DOUBLE_EQ(back.auc, r.auc);
  EXPECT_DOUBLE_EQ(back.localization->iou, 0.5);
  EXPECT_FALSE(back.localization_all.has_value());
  EXPECT_THROW(metrics::EvalReport::from_json(nlohmann::json{{"name", "x"}}), DataError);
}
