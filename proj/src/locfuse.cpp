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

#include "telltale/locfuse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "telltale/error.hpp"

namespace telltale::locfuse {

FusionWeights FusionWeights::normalized() const {
  if (gamma1 < 0.0 || gamma2 < 0.0 || gamma3 < 0.0) {
    throw InvalidArgument("fusion weights must be non-negative");
  }
  const double sum = gamma1 + gamma2 + gamma3;
  if (!(sum > 0.0) || !std::isfinite(sum)) throw InvalidArgument("fusion weights sum to zero");
  if (sum == 1.0) return *this;
  return {gamma1 / sum, gamma2 / sum, gamma3 / sum};
}

FusionWeights FusionWeights::parse(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("cannot parse fusion weight '" + item + "'");
    }
  }
  if (values.size() != 3) throw InvalidArgument("expected three comma-separated fusion weights");
  return FusionWeights{values[0], values[1], values[2]}.normalized();
}

Plane upsample_bilinear(const Plane& map, int target_h, int target_w) {
  if (map.channels() != 1 || map.empty()) throw InvalidArgument("upsample: need a non-empty plane");
  if (target_h < 1 || target_w < 1) throw InvalidArgument("upsample: target dims must be >= 1");
  const int h = map.height(), w = map.width();
  auto coord = [](int i, int in, int out) {
    const double src = (i + 0.5) * static_cast<double>(in) / out - 0.5;
    return std::clamp(src, 0.0, static_cast<double>(in - 1));
  };
  Plane out(1, target_h, target_w);
  for (int y = 0; y < target_h; ++y) {
    const double sy = coord(y, h, target_h);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double ty = sy - y0;
    for (int x = 0; x < target_w; ++x) {
      const double sx = coord(x, w, target_w);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double tx = sx - x0;
      const double top = (1.0 - tx) * map.at(y0, x0) + tx * map.at(y0, x1);
      const double bottom = (1.0 - tx) * map.at(y1, x0) + tx * map.at(y1, x1);
      out.at(y, x) = (1.0 - ty) * top + ty * bottom;
    }
  }
  return out;
}

Plane fuse_maps(std::span<const Plane, 3> maps, int target_h, int target_w,
                const FusionWeights& weights) {
  const FusionWeights w = weights.normalized();
  const double gammas[3] = {w.gamma1, w.gamma2, w.gamma3};
  Plane fused(1, target_h, target_w);
  for (int j = 0; j < 3; ++j) {
    if (gammas[j] == 0.0) continue;
    const Plane up = upsample_bilinear(maps[j], target_h, target_w);
    for (size_t i = 0; i < fused.size(); ++i) fused[i] += gammas[j] * up[i];
  }
  for (double& v : fused.data()) v = std::clamp(v, 0.0, 1.0);
  return fused;
}

Plane binarize(const Plane& map, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgument("binarize: threshold must lie in (0, 1)");
  }
  Plane out(map.channels(), map.height(), map.width());
  for (size_t i = 0; i < map.size(); ++i) out[i] = map[i] >= threshold ? 1.0 : 0.0;
  return out;
}

}  // namespace telltale::locfuse
