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

// Desk-scale pristine/manipulated pairs with exact ground-truth masks.
//
// Each pair starts from a base image (procedural texture, or a PNG from a
// user directory). The fake copy gets an elliptical region composited in
// with a linearly feathered alpha, plus region-local AWGN and a colour shift.
// Ground truth is alpha > 0.5. Every pair draws from its own RNG stream
// seeded by (seed, index).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "telltale/image.hpp"
#include "telltale/manifest.hpp"

namespace telltale::synthbench {

struct SpliceSpec {
  int count = 10;  // number of real/fake pairs
  uint64_t seed = 0;
  int image_size = 64;
  // Optional directory of PNG bases (sorted by name, centre-cropped). Empty
  // means procedural textures.
  std::filesystem::path base_dir;
  // Ellipse semi-axes and centre offsets, as fractions of image_size.
  double axis_min = 0.22;
  double axis_max = 0.36;
  double center_jitter = 0.08;
  double feather = 2.0;       // pixels; alpha = 0.5 on the ellipse boundary
  double noise_sigma = 6.0;   // sigma_s of the region-local AWGN
  double color_shift = 12.0;  // max per-channel offset inside the region
  double base_noise = 1.0;    // sensor noise added to procedural bases
  // Fractions of pairs sent to val and test; both images of a pair share a split.
  double val_fraction = 0.0;
  double test_fraction = 0.0;
  // Manipulation labels cycled over pairs (df, ff, fs, nt).
  std::vector<std::string> methods = {"df"};
  std::string quality = "hq";

  // Throws InvalidArgument when the ellipse cannot fit or a field is out of range.
  void validate() const;
};

struct SyntheticPair {
  Image real;
  Image fake;
  Plane mask;  // binary, full resolution
  std::string method;
  std::string split;
};

// Split of pair `index` under its val/test fractions (last pairs go to test,
// the ones before them to val).
std::string split_of(const SpliceSpec& spec, int index);

SyntheticPair generate_pair(const SpliceSpec& spec, int index);

// Writes images/, masks/ and manifest.jsonl under `out_dir` (real then fake
// for every pair, paths relative to out_dir). Returns the records as
// written.
std::vector<data::ManifestRecord> generate(const SpliceSpec& spec,
                                           const std::filesystem::path& out_dir);

}  // namespace telltale::synthbench
