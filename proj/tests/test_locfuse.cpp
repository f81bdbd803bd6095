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
#include <random>

#include "oracles.hpp"
#include "telltale/error.hpp"
#include "telltale/locfuse.hpp"

using namespace telltale;
using namespace telltale::locfuse;

namespace {

std::array<Plane, 3> random_maps(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<Plane, 3> maps = {Plane(1, 8, 8), Plane(1, 4, 4), Plane(1, 2, 2)};
  for (auto& m : maps)
    for (double& v : m.data()) v = u(rng);
  return maps;
}

}  // namespace

TEST(FusionWeights, NormalizeAndParse) {
  const FusionWeights d;
  const auto n = d.normalized();
  EXPECT_EQ(n.gamma1, 0.1);
  EXPECT_EQ(n.gamma2, 0.2);
  EXPECT_EQ(n.gamma3, 0.7);
  const auto w = FusionWeights{1, 1, 2}.normalized();
  EXPECT_DOUBLE_EQ(w.gamma3, 0.5);
  const auto again = w.normalized();
  EXPECT_EQ(again.gamma1, w.gamma1);
  EXPECT_EQ(again.gamma3, w.gamma3);
  EXPECT_THROW((FusionWeights{0, 0, 0}.normalized()), InvalidArgument);
  EXPECT_THROW((FusionWeights{-0.1, 0.5, 0.6}.normalized()), InvalidArgument);
  const auto p = FusionWeights::parse("0.2, 0.3,0.5");
  EXPECT_DOUBLE_EQ(p.gamma2, 0.3);
  EXPECT_THROW(FusionWeights::parse("0.2,0.3"), InvalidArgument);
  EXPECT_THROW(FusionWeights::parse("a,b,c"), InvalidArgument);
}

TEST(Upsample, MatchesTentOracle) {
  std::mt19937_64 rng(1);
  for (auto [h, w, th, tw] : {std::array{2, 2, 8, 8}, {4, 4, 64, 64}, {3, 5, 7, 11}, {4, 4, 4, 4}}) {
    Plane m(1, h, w);
    std::uniform_real_distribution<double> u(0, 1);
    for (double& v : m.data()) v = u(rng);
    const Plane a = upsample_bilinear(m, th, tw), b = oracle::tent_resize(m, th, tw);
    for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(FuseMaps, DegenerateWeightsGiveUpsampledDeepMap) {
  std::mt19937_64 rng(2);
  const auto maps = random_maps(rng);
  const Plane fused = fuse_maps(maps, 32, 32, {0, 0, 1});
  EXPECT_TRUE(fused == upsample_bilinear(maps[2], 32, 32));
}

TEST(FuseMaps, ConstantMaps) {
  std::array<Plane, 3> maps = {Plane(1, 8, 8), Plane(1, 4, 4), Plane(1, 2, 2)};
  for (auto& m : maps) m.fill(0.4);
  for (FusionWeights w : {FusionWeights{}, FusionWeights{1, 0, 0}, FusionWeights{0.3, 0.3, 0.4}}) {
    for (double v : fuse_maps(maps, 16, 16, w).data()) EXPECT_NEAR(v, 0.4, 1e-12);
  }
}

TEST(FuseMaps, MatchesPerPixelOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto maps = random_maps(rng);
    const Plane fused = fuse_maps(maps, 32, 32);
    const Plane u1 = oracle::tent_resize(maps[0], 32, 32), u2 = oracle::tent_resize(maps[1], 32, 32),
                u3 = oracle::tent_resize(maps[2], 32, 32);
    for (size_t i = 0; i < fused.size(); ++i) {
      const double want = 0.1 * u1[i] + 0.2 * u2[i] + 0.7 * u3[i];
      EXPECT_NEAR(fused[i], want, 1e-9);
      const double lo = std::min({u1[i], u2[i], u3[i]}), hi = std::max({u1[i], u2[i], u3[i]});
      EXPECT_GE(fused[i], lo - 1e-12);
      EXPECT_LE(fused[i], hi + 1e-12);
    }
  }
}

TEST(Binarize, Examples) {
  Plane m(1, 3, 3);
  m.fill(0.6);
  for (double v : binarize(m).data()) EXPECT_EQ(v, 1.0);
  m.fill(0.4);
  for (double v : binarize(m).data()) EXPECT_EQ(v, 0.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : m.data()) v = u(rng);
  m[0] = 0.3;  // exactly at the threshold below
  const Plane b = binarize(m, 0.3);
  for (size_t i = 0; i < m.size(); ++i) EXPECT_EQ(b[i], m[i] >= 0.3 ? 1.0 : 0.0);
  EXPECT_THROW(binarize(m, 0.0), InvalidArgument);
  EXPECT_THROW(binarize(m, 1.0), InvalidArgument);
}
