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

#include "telltale/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "telltale/error.hpp"

namespace telltale::maskgen {
namespace {

// Weights mapping `in` samples onto `out` samples along one axis.
struct Tap {
  int index;
  double weight;
};

std::vector<std::vector<Tap>> axis_weights(int in, int out) {
  std::vector<std::vector<Tap>> taps(out);
  if (out <= in) {
    // Area averaging: output cell i covers [i*in/out, (i+1)*in/out).
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
      const double lo = i * scale, hi = (i + 1) * scale;
      for (int j = static_cast<int>(std::floor(lo)); j < in && j < hi; ++j) {
        const double overlap = std::min<double>(hi, j + 1) - std::max<double>(lo, j);
        if (overlap > 1e-12) taps[i].push_back({j, overlap / scale});
      }
    }
  } else {
    // Bilinear with half-pixel centres, clamped at the borders.
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
      double src = (i + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const int j0 = static_cast<int>(std::floor(src));
      const int j1 = std::min(j0 + 1, in - 1);
      const double t = src - j0;
      if (j1 == j0 || t == 0.0) {
        taps[i].push_back({j0, 1.0});
      } else {
        taps[i].push_back({j0, 1.0 - t});
        taps[i].push_back({j1, t});
      }
    }
  }
  return taps;
}

}  // namespace

BinaryMask pair_to_mask(const Image& real_image, const Image& fake_image,
                        const ThresholdConfig& cfg) {
  if (!real_image.same_shape(fake_image)) {
    throw InvalidArgument("pair_to_mask: real and fake images differ in shape");
  }
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) {
    throw InvalidArgument("pair_to_mask: threshold must lie in (0, 1)");
  }
  const int h = real_image.height(), w = real_image.width();
  BinaryMask mask(1, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double diff = 0.0;
      for (int c = 0; c < real_image.channels(); ++c) {
        diff = std::max(diff, std::abs(real_image.at(c, y, x) - fake_image.at(c, y, x)));
      }
      mask.at(y, x) = diff / 255.0 >= cfg.threshold ? 1.0 : 0.0;
    }
  }
  if (cfg.morph_cleanup) {
    mask = erode3(dilate3(mask));  // closing
    mask = dilate3(erode3(mask));  // opening
  }
  return mask;
}

BinaryMask dilate3(const BinaryMask& mask) {
  const int h = mask.height(), w = mask.width();
  BinaryMask out(1, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w) v = std::max(v, mask.at(yy, xx));
        }
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

BinaryMask erode3(const BinaryMask& mask) {
  const int h = mask.height(), w = mask.width();
  BinaryMask out(1, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 1.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w) v = std::min(v, mask.at(yy, xx));
        }
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

Tensor<double> resize_area(const Tensor<double>& input, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) throw InvalidArgument("resize: target dims must be >= 1");
  if (input.empty()) throw InvalidArgument("resize: empty input");
  const auto row_taps = axis_weights(input.height(), target_h);
  const auto col_taps = axis_weights(input.width(), target_w);
  Tensor<double> out(input.channels(), target_h, target_w);
  std::vector<double> tmp(static_cast<size_t>(input.height()) * target_w);
  for (int c = 0; c < input.channels(); ++c) {
    for (int y = 0; y < input.height(); ++y) {
      for (int x = 0; x < target_w; ++x) {
        double s = 0.0;
        for (const Tap& t : col_taps[x]) s += t.weight * input.at(c, y, t.index);
        tmp[static_cast<size_t>(y) * target_w + x] = s;
      }
    }
    for (int y = 0; y < target_h; ++y) {
      for (int x = 0; x < target_w; ++x) {
        double s = 0.0;
        for (const Tap& t : row_taps[y]) s += t.weight * tmp[static_cast<size_t>(t.index) * target_w + x];
        out.at(c, y, x) = s;
      }
    }
  }
  return out;
}

BinaryMask align_mask(const BinaryMask& mask, int target_h, int target_w) {
  if (mask.channels() != 1) throw InvalidArgument("align_mask: mask must be single-channel");
  BinaryMask out = resize_area(mask, target_h, target_w);
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace telltale::maskgen
