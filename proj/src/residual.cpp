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

#include "telltale/residual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "telltale/error.hpp"

namespace telltale::residual {

int reflect_index(int index, int size) {
  if (size <= 1) return 0;
  const int period = 2 * (size - 1);
  index %= period;
  if (index < 0) index += period;
  return index < size ? index : period - index;
}

double shrink_coefficient(double coefficient, double sigma_hat_sq, double sigma_sq) {
  const double denom = sigma_hat_sq + sigma_sq;
  if (denom <= 0.0) return 0.0;
  return coefficient * (sigma_hat_sq / denom);
}

namespace wavelet {
namespace {

constexpr std::array<double, 8> kLowpass = {
    0.23037781330885523,  0.71484657055254153, 0.63088076792959036,  -0.027983769416983849,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278};

// g[m] = (-1)^m h[L-1-m]
constexpr std::array<double, 8> make_highpass() {
  std::array<double, 8> g{};
  for (size_t m = 0; m < g.size(); ++m) {
    g[m] = (m % 2 == 0 ? 1.0 : -1.0) * kLowpass[kLowpass.size() - 1 - m];
  }
  return g;
}
constexpr std::array<double, 8> kHighpass = make_highpass();

// One periodized analysis step on `n` (even) samples read with `stride`.
void analyze(const double* in, size_t stride, int n, double* approx, double* detail,
             size_t out_stride) {
  const int half = n / 2;
  for (int k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (size_t m = 0; m < kLowpass.size(); ++m) {
      const double v = in[static_cast<size_t>((2 * k + static_cast<int>(m)) % n) * stride];
      a += kLowpass[m] * v;
      d += kHighpass[m] * v;
    }
    approx[k * out_stride] = a;
    detail[k * out_stride] = d;
  }
}

void synthesize(const double* approx, const double* detail, size_t in_stride, int n, double* out,
                size_t stride) {
  for (int i = 0; i < n; ++i) out[i * stride] = 0.0;
  const int half = n / 2;
  for (int k = 0; k < half; ++k) {
    const double a = approx[k * in_stride];
    const double d = detail[k * in_stride];
    for (size_t m = 0; m < kLowpass.size(); ++m) {
      out[static_cast<size_t>((2 * k + static_cast<int>(m)) % n) * stride] +=
          kLowpass[m] * a + kHighpass[m] * d;
    }
  }
}

Plane pad_even(const Plane& plane) {
  const int h = plane.height() + plane.height() % 2;
  const int w = plane.width() + plane.width() % 2;
  if (h == plane.height() && w == plane.width()) return plane;
  Plane out(1, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(y, x) = plane.at(std::min(y, plane.height() - 1), std::min(x, plane.width() - 1));
    }
  }
  return out;
}

}  // namespace

std::span<const double> daubechies8_lowpass() { return kLowpass; }

Decomposition forward(const Plane& plane, int levels) {
  if (plane.channels() != 1 || plane.empty()) {
    throw InvalidArgument("wavelet::forward expects a non-empty single-channel plane");
  }
  Decomposition result;
  Plane current = plane;
  for (int level = 0; level < levels; ++level) {
    Level lv;
    lv.height = current.height();
    lv.width = current.width();
    Plane padded = pad_even(current);
    const int h = padded.height(), w = padded.width();
    const int h2 = h / 2, w2 = w / 2;

    // Rows: left half approximation, right half detail.
    Plane rows(1, h, w);
    for (int y = 0; y < h; ++y) {
      analyze(&padded.at(y, 0), 1, w, &rows.at(y, 0), &rows.at(y, w2), 1);
    }
    Plane both(1, h, w);
    for (int x = 0; x < w; ++x) {
      analyze(&rows.at(0, x), static_cast<size_t>(w), h, &both.at(0, x), &both.at(h2, x),
              static_cast<size_t>(w));
    }
    Plane approx(1, h2, w2);
    for (auto& band : lv.details) band = Plane(1, h2, w2);
    for (int y = 0; y < h2; ++y) {
      for (int x = 0; x < w2; ++x) {
        approx.at(y, x) = both.at(y, x);
        lv.details[0].at(y, x) = both.at(y, x + w2);
        lv.details[1].at(y, x) = both.at(y + h2, x);
        lv.details[2].at(y, x) = both.at(y + h2, x + w2);
      }
    }
    result.levels.push_back(std::move(lv));
    current = std::move(approx);
  }
  result.approximation = std::move(current);
  return result;
}

Plane inverse(const Decomposition& decomposition) {
  Plane current = decomposition.approximation;
  for (auto it = decomposition.levels.rbegin(); it != decomposition.levels.rend(); ++it) {
    const Level& lv = *it;
    const int h2 = current.height(), w2 = current.width();
    const int h = 2 * h2, w = 2 * w2;
    Plane both(1, h, w);
    for (int y = 0; y < h2; ++y) {
      for (int x = 0; x < w2; ++x) {
        both.at(y, x) = current.at(y, x);
        both.at(y, x + w2) = lv.details[0].at(y, x);
        both.at(y + h2, x) = lv.details[1].at(y, x);
        both.at(y + h2, x + w2) = lv.details[2].at(y, x);
      }
    }
    Plane rows(1, h, w);
    for (int x = 0; x < w; ++x) {
      synthesize(&both.at(0, x), &both.at(h2, x), static_cast<size_t>(w), h, &rows.at(0, x),
                 static_cast<size_t>(w));
    }
    Plane full(1, h, w);
    for (int y = 0; y < h; ++y) {
      synthesize(&rows.at(y, 0), &rows.at(y, w2), 1, w, &full.at(y, 0), 1);
    }
    Plane cropped(1, lv.height, lv.width);
    for (int y = 0; y < lv.height; ++y) {
      for (int x = 0; x < lv.width; ++x) cropped.at(y, x) = full.at(y, x);
    }
    current = std::move(cropped);
  }
  return current;
}

Plane local_signal_variance(const Plane& subband, double sigma_sq) {
  const int h = subband.height(), w = subband.width();
  Plane squared(1, h, w);
  for (size_t i = 0; i < squared.size(); ++i) squared[i] = subband[i] * subband[i];

  Plane best(1, h, w, std::numeric_limits<double>::infinity());
  Plane row_sums(1, h, w);
  for (int window : {3, 5, 7, 9}) {
    const int r = window / 2;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int dx = -r; dx <= r; ++dx) s += squared.at(y, reflect_index(x + dx, w));
        row_sums.at(y, x) = s;
      }
    }
    const double inv_area = 1.0 / (window * window);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int dy = -r; dy <= r; ++dy) s += row_sums.at(reflect_index(y + dy, h), x);
        best.at(y, x) = std::min(best.at(y, x), s * inv_area);
      }
    }
  }
  for (size_t i = 0; i < best.size(); ++i) best[i] = std::max(0.0, best[i] - sigma_sq);
  return best;
}

Plane denoise(const Plane& plane, double sigma) {
  const double sigma_sq = sigma * sigma;
  Decomposition dec = forward(plane, kWaveletLevels);
  for (Level& lv : dec.levels) {
    for (Plane& band : lv.details) {
      const Plane variance = local_signal_variance(band, sigma_sq);
      for (size_t i = 0; i < band.size(); ++i) {
        band[i] = shrink_coefficient(band[i], variance[i], sigma_sq);
      }
    }
  }
  return inverse(dec);
}

}  // namespace wavelet

NoiseMap extract_residual(const Image& image, double sigma) {
  require_finite(image, "extract_residual");
  if (image.height() < kMinWaveletSize || image.width() < kMinWaveletSize) {
    throw InvalidArgument("extract_residual: image must be at least 8x8");
  }
  if (!(sigma >= 0.0 && sigma <= kMaxSigma)) {
    throw InvalidArgument("extract_residual: sigma must lie in [0, 50]");
  }
  NoiseMap map{Image(image.channels(), image.height(), image.width()), sigma};
  // sigma = 0 makes every attenuation factor 1: the filter is the identity.
  if (sigma == 0.0) return map;

  for (int c = 0; c < image.channels(); ++c) {
    Plane plane(1, image.height(), image.width());
    std::copy(image.plane(c).begin(), image.plane(c).end(), plane.data().begin());
    const Plane denoised = wavelet::denoise(plane, sigma);
    auto out = map.residual.plane(c);
    for (size_t i = 0; i < out.size(); ++i) out[i] = plane[i] - denoised[i];
  }
  return map;
}

namespace srm {

const std::array<Kernel, 3>& kernels() {
  static const std::array<Kernel, 3> k = [] {
    std::array<Kernel, 3> out{};
    // First order: [1 -2 1] / 2 on the centre row.
    out[0][2][1] = 0.5;
    out[0][2][2] = -1.0;
    out[0][2][3] = 0.5;
    // Second order 3x3.
    const double second[3][3] = {{-1, 2, -1}, {2, -4, 2}, {-1, 2, -1}};
    for (int y = 0; y < 3; ++y) {
      for (int x = 0; x < 3; ++x) out[1][y + 1][x + 1] = second[y][x] / 4.0;
    }
    // KV 5x5.
    const double kv[5][5] = {{-1, 2, -2, 2, -1},
                             {2, -6, 8, -6, 2},
                             {-2, 8, -12, 8, -2},
                             {2, -6, 8, -6, 2},
                             {-1, 2, -2, 2, -1}};
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 5; ++x) out[2][y][x] = kv[y][x] / 12.0;
    }
    return out;
  }();
  return k;
}

Kernel averaged_kernel() {
  Kernel avg{};
  for (const Kernel& k : kernels()) {
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 5; ++x) avg[y][x] += k[y][x] / 3.0;
    }
  }
  return avg;
}

}  // namespace srm

NoiseMap srm_residual(const Image& image) {
  require_finite(image, "srm_residual");
  if (image.height() < 5 || image.width() < 5) {
    throw InvalidArgument("srm_residual: image must be at least 5x5");
  }
  const srm::Kernel kernel = srm::averaged_kernel();
  const int h = image.height(), w = image.width();
  NoiseMap map{Image(image.channels(), h, w), 0.0};
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // True convolution: the kernel is flipped relative to the image.
        double acc = 0.0;
        for (int ky = 0; ky < 5; ++ky) {
          const int sy = reflect_index(y + 2 - ky, h);
          for (int kx = 0; kx < 5; ++kx) {
            acc += kernel[ky][kx] * image.at(c, sy, reflect_index(x + 2 - kx, w));
          }
        }
        map.residual.at(c, y, x) = acc;
      }
    }
  }
  return map;
}

ResidualStats residual_stats(const NoiseMap& map) {
  const auto& values = map.residual.data();
  if (values.empty()) throw InvalidArgument("residual_stats: empty map");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, var};
}

}  // namespace telltale::residual
