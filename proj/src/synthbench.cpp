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

#include "telltale/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "telltale/error.hpp"

namespace telltale::synthbench {
namespace {

using Rng = std::mt19937_64;

Rng pair_rng(uint64_t seed, int index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(index), 0x5e1ceu};
  return Rng(seq);
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Smooth colour texture: per-channel base level, a linear ramp and a few
// oriented sinusoids shared across channels with per-channel gains.
Image procedural_texture(Rng& rng, int size, double sensor_noise) {
  Image img(3, size, size);
  double level[3], ramp_x[3], ramp_y[3];
  for (int c = 0; c < 3; ++c) {
    level[c] = uniform(rng, 60.0, 190.0);
    ramp_x[c] = uniform(rng, -30.0, 30.0);
    ramp_y[c] = uniform(rng, -30.0, 30.0);
  }
  constexpr int kWaves = 4;
  double fx[kWaves], fy[kWaves], phase[kWaves], gain[kWaves][3];
  for (int k = 0; k < kWaves; ++k) {
    const double freq = uniform(rng, 0.5, 4.0) * 2.0 * std::numbers::pi / size;
    const double angle = uniform(rng, 0.0, std::numbers::pi);
    fx[k] = freq * std::cos(angle);
    fy[k] = freq * std::sin(angle);
    phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = uniform(rng, 5.0, 22.0);
    for (int c = 0; c < 3; ++c) gain[k][c] = amp * uniform(rng, 0.6, 1.0);
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / size - 0.5;
      const double v = static_cast<double>(y) / size - 0.5;
      for (int c = 0; c < 3; ++c) {
        double value = level[c] + ramp_x[c] * u + ramp_y[c] * v;
        for (int k = 0; k < kWaves; ++k) {
          value += gain[k][c] * std::sin(fx[k] * x + fy[k] * y + phase[k]);
        }
        img.at(c, y, x) = value;
      }
    }
  }
  if (sensor_noise > 0) {
    for (size_t i = 0; i < img.size(); ++i) img[i] += sensor_noise * noise(rng);
  }
  return img;
}

Image quantize(Image img) {
  for (size_t i = 0; i < img.size(); ++i) img[i] = std::clamp(std::round(img[i]), 0.0, 255.0);
  return img;
}

Image centre_crop(const Image& src, int size) {
  if (src.height() < size || src.width() < size) {
    throw DataError("base image smaller than image_size");
  }
  const int oy = (src.height() - size) / 2;
  const int ox = (src.width() - size) / 2;
  Image out(3, size, size);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) out.at(c, y, x) = src.at(c, oy + y, ox + x);
    }
  }
  return out;
}

std::vector<std::filesystem::path> list_bases(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no PNG files in " + dir.string());
  return files;
}

Image shifted(const Image& src, int dy, int dx) {
  Image out(src.channels(), src.height(), src.width());
  const int h = src.height(), w = src.width();
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(c, y, x) = src.at(c, std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
      }
    }
  }
  return out;
}

Image box_blur3(const Image& src) {
  Image out(src.channels(), src.height(), src.width());
  const int h = src.height(), w = src.width();
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            s += src.at(c, std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
          }
        }
        out.at(c, y, x) = s / 9.0;
      }
    }
  }
  return out;
}

}  // namespace

void SpliceSpec::validate() const {
  if (count < 1) throw InvalidArgument("count must be >= 1");
  if (image_size < 16) throw InvalidArgument("image_size must be >= 16");
  if (!(axis_min > 0) || !(axis_max >= axis_min)) {
    throw InvalidArgument("need 0 < axis_min <= axis_max");
  }
  if (!(center_jitter >= 0)) throw InvalidArgument("center_jitter must be >= 0");
  if (!(feather >= 0)) throw InvalidArgument("feather must be >= 0");
  if (!(noise_sigma >= 0)) throw InvalidArgument("noise_sigma must be >= 0");
  if (!(color_shift >= 0)) throw InvalidArgument("color_shift must be >= 0");
  if (!(base_noise >= 0)) throw InvalidArgument("base_noise must be >= 0");
  if (!(val_fraction >= 0) || !(test_fraction >= 0) || val_fraction + test_fraction > 1) {
    throw InvalidArgument("split fractions must be non-negative and sum to <= 1");
  }
  // The feathered ellipse, at its largest and most off-centre, must stay
  // inside the frame with one pixel to spare.
  const double reach = (axis_max + center_jitter) * image_size + feather / 2 + 1;
  if (reach > image_size / 2.0) throw InvalidArgument("ellipse does not fit inside the image");
  if (methods.empty()) throw InvalidArgument("methods must not be empty");
  for (const auto& m : methods) {
    const bool known = std::any_of(std::begin(data::kClassNames) + 1, std::end(data::kClassNames),
                                   [&](const char* name) { return m == name; });
    if (!known) throw InvalidArgument("bad method " + m);
  }
  if (quality != "hq" && quality != "lq") throw InvalidArgument("quality must be hq or lq");
}

std::string split_of(const SpliceSpec& spec, int index) {
  const int n_test = static_cast<int>(std::lround(spec.test_fraction * spec.count));
  const int n_val = static_cast<int>(std::lround(spec.val_fraction * spec.count));
  if (index >= spec.count - n_test) return "test";
  if (index >= spec.count - n_test - n_val) return "val";
  return "train";
}

SyntheticPair generate_pair(const SpliceSpec& spec, int index) {
  spec.validate();
  const int size = spec.image_size;
  Rng rng = pair_rng(spec.seed, index);

  Image base;
  if (spec.base_dir.empty()) {
    base = procedural_texture(rng, size, spec.base_noise);
  } else {
    const auto files = list_bases(spec.base_dir);
    base = centre_crop(load_png(files[static_cast<size_t>(index) % files.size()]), size);
  }
  base = quantize(std::move(base));

  SyntheticPair pair;
  pair.method = spec.methods[static_cast<size_t>(index) % spec.methods.size()];
  pair.split = split_of(spec, index);

  // Region content per manipulation flavour.
  Image content;
  double feather = spec.feather;
  double sigma = spec.noise_sigma;
  if (pair.method == "ff") {
    const int dy = static_cast<int>(uniform(rng, 3, 7)) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
    const int dx = static_cast<int>(uniform(rng, 3, 7)) * (uniform(rng, 0, 1) < 0.5 ? -1 : 1);
    content = shifted(base, dy, dx);
  } else {
    content = procedural_texture(rng, size, spec.base_noise);
    if (pair.method == "fs") feather = std::min(feather, 0.75);
    if (pair.method == "nt") {
      content = box_blur3(content);
      sigma *= 1.5;
    }
  }

  const double a = size * uniform(rng, spec.axis_min, spec.axis_max);
  const double b = size * uniform(rng, spec.axis_min, spec.axis_max);
  const double cy = size / 2.0 + size * uniform(rng, -spec.center_jitter, spec.center_jitter);
  const double cx = size / 2.0 + size * uniform(rng, -spec.center_jitter, spec.center_jitter);
  const double theta = uniform(rng, 0.0, std::numbers::pi);
  double shift[3];
  for (double& s : shift) s = uniform(rng, -spec.color_shift, spec.color_shift);

  std::normal_distribution<double> noise(0.0, 1.0);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double scale = std::min(a, b);
  pair.real = base;
  pair.fake = base;
  pair.mask = Plane(1, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double py = y + 0.5 - cy, px = x + 0.5 - cx;
      const double u = (px * ct + py * st) / a;
      const double v = (-px * st + py * ct) / b;
      const double r = std::sqrt(u * u + v * v);
      // Signed distance to the boundary, approximated in units of the minor axis.
      const double d = (1.0 - r) * scale;
      double alpha;
      if (feather <= 0) {
        alpha = d > 0 ? 1.0 : 0.0;
      } else {
        alpha = std::clamp(0.5 + d / feather, 0.0, 1.0);
      }
      // Noise is drawn for every pixel so the stream does not depend on geometry.
      double n[3];
      for (double& v3 : n) v3 = noise(rng);
      if (alpha <= 0) continue;
      for (int c = 0; c < 3; ++c) {
        const double inside = content.at(c, y, x) + shift[c] + sigma * n[c];
        pair.fake.at(c, y, x) = (1.0 - alpha) * base.at(c, y, x) + alpha * inside;
      }
      if (alpha > 0.5) pair.mask.at(y, x) = 1.0;
    }
  }
  pair.fake = quantize(std::move(pair.fake));
  return pair;
}

std::vector<data::ManifestRecord> generate(const SpliceSpec& spec,
                                           const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir / "images");
  std::filesystem::create_directories(out_dir / "masks");
  std::vector<data::ManifestRecord> records;
  for (int i = 0; i < spec.count; ++i) {
    const SyntheticPair pair = generate_pair(spec, i);
    char stem[32];
    std::snprintf(stem, sizeof stem, "pair_%05d", i);
    const std::string real_img = std::string("images/") + stem + "_real.png";
    const std::string fake_img = std::string("images/") + stem + "_fake.png";
    const std::string real_mask = std::string("masks/") + stem + "_real.png";
    const std::string fake_mask = std::string("masks/") + stem + "_fake.png";
    save_png(out_dir / real_img, pair.real);
    save_png(out_dir / fake_img, pair.fake);
    Plane empty(1, spec.image_size, spec.image_size);
    save_png(out_dir / real_mask, empty);
    Plane mask255 = pair.mask;
    for (size_t k = 0; k < mask255.size(); ++k) mask255[k] *= 255.0;
    save_png(out_dir / fake_mask, mask255);

    data::ManifestRecord real;
    real.image_path = real_img;
    real.label = "real";
    real.mask_path = real_mask;
    real.split = pair.split;
    real.quality = spec.quality;
    data::ManifestRecord fake;
    fake.image_path = fake_img;
    fake.label = pair.method;
    fake.mask_path = fake_mask;
    fake.pair_path = real_img;
    fake.split = pair.split;
    fake.quality = spec.quality;
    records.push_back(real);
    records.push_back(fake);
  }
  data::write_manifest(out_dir / "manifest.jsonl", records);
  return records;
}

}  // namespace telltale::synthbench
