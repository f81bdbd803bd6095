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

// Noise residual extraction: n = F - f(F), where f is a spatially adaptive
// Wiener filter applied to orthogonal wavelet detail coefficients, plus an
// SRM high-pass alternative and residual moment statistics.

#include <array>
#include <span>
#include <vector>

#include "telltale/image.hpp"

namespace telltale::residual {

// Default AWGN standard deviations (0-255 scale) by input quality.
inline constexpr double kSigmaHighQuality = 5.0;
inline constexpr double kSigmaLowQuality = 10.0;
inline constexpr double kMaxSigma = 50.0;
inline constexpr int kWaveletLevels = 4;
inline constexpr int kMinWaveletSize = 8;

struct NoiseMap {
  Image residual;      // same shape as the source image, 0-255 scale
  double sigma = 0.0;  // AWGN std used for extraction; 0 for SRM
};

struct ResidualStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

enum class Filter { kWavelet, kSrm };

// Wiener attenuation c * s^2 / (s^2 + sigma^2). Returns 0 when both
// variances are zero.
double shrink_coefficient(double coefficient, double sigma_hat_sq, double sigma_sq);

// Per-channel wavelet residual. Throws InvalidArgument on non-finite pixels,
// images smaller than 8x8 or sigma outside [0, 50].
NoiseMap extract_residual(const Image& image, double sigma);

// Mean of the three SRM high-pass responses per channel. Throws
// InvalidArgument for images smaller than 5x5.
NoiseMap srm_residual(const Image& image);

// Throws InvalidArgument on an empty map.
ResidualStats residual_stats(const NoiseMap& map);

// Border reflection without edge duplication (2 1 | 0 1 2 ... | n-2 n-3).
// Folds repeatedly, so any index maps into [0, size).
int reflect_index(int index, int size);

namespace wavelet {

// 8-tap orthonormal Daubechies low-pass filter (four vanishing moments).
std::span<const double> daubechies8_lowpass();

struct Level {
  int height = 0;  // size of the input to this level, before even padding
  int width = 0;
  std::array<Plane, 3> details;  // horizontal, vertical, diagonal
};

struct Decomposition {
  std::vector<Level> levels;  // finest first
  Plane approximation;
};

// Periodized orthogonal 2-D DWT. Odd dimensions are padded by edge
// replication before each level and cropped on reconstruction.
Decomposition forward(const Plane& plane, int levels);
Plane inverse(const Decomposition& decomposition);

// max(0, min_W mean_{WxW}(c^2) - sigma^2) for W in {3,5,7,9}, reflect-padded.
Plane local_signal_variance(const Plane& subband, double sigma_sq);

// Wiener-filters every detail coefficient of one plane.
Plane denoise(const Plane& plane, double sigma);

}  // namespace wavelet

namespace srm {

using Kernel = std::array<std::array<double, 5>, 5>;

// First-order, second-order 3x3 and 5x5 KV kernels (each embedded in 5x5 and
// normalized by 1/2, 1/4 and 1/12 respectively).
const std::array<Kernel, 3>& kernels();

// Averaged kernel actually applied by srm_residual.
Kernel averaged_kernel();

}  // namespace srm

}  // namespace telltale::residual
