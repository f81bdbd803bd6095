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

#include "telltale/dataset.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "telltale/error.hpp"

namespace telltale::data {
namespace {

Plane load_mask(const std::string& path) {
  Plane m = load_png(path, 1);
  for (size_t i = 0; i < m.size(); ++i) m[i] = m[i] >= 127.5 ? 1.0 : 0.0;
  return m;
}

Tensor<float> to_float(const Tensor<double>& t) { return t.cast<float>(); }

}  // namespace

int worker_count() {
  const char* env = std::getenv("TELLTALE_WORKERS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t count = std::min<size_t>(static_cast<size_t>(workers), n);
  for (size_t t = 0; t < count; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Tensor<float> normalize_input(const Image& image) {
  Tensor<float> out(image.channels(), image.height(), image.width());
  for (size_t i = 0; i < image.size(); ++i) {
    out[i] = static_cast<float>(image[i] / 127.5 - 1.0);
  }
  return out;
}

PreparedSample prepare_sample(const ManifestRecord& record, const PrepareOptions& options) {
  PreparedSample s;
  s.id = record.image_path;
  s.label = class_index(record.label);
  s.binary = s.label == 0 ? 0 : 1;
  const Image image = load_png(record.image_path);
  const int h = image.height(), w = image.width();
  const int s3 = options.strides[2];
  if (h % s3 != 0 || w % s3 != 0) {
    throw DataError(record.image_path + ": size " + std::to_string(h) + "x" + std::to_string(w) +
                    " is not a multiple of " + std::to_string(s3));
  }
  s.input = normalize_input(image);

  if (record.mask_path) {
    s.mask = load_mask(*record.mask_path);
    s.has_mask = true;
  } else if (record.pair_path) {
    const Image real = load_png(*record.pair_path);
    if (!real.same_shape(image)) throw DataError(record.image_path + ": pair size mismatch");
    s.mask = maskgen::pair_to_mask(real, image, options.mask);
    s.has_mask = true;
  } else {
    s.mask = Plane(1, h, w);
    s.has_mask = s.binary == 0;
  }
  if (!s.mask.same_spatial(h, w)) throw DataError(record.image_path + ": mask size mismatch");

  for (int j = 0; j < 3; ++j) {
    const int mh = h / options.strides[j], mw = w / options.strides[j];
    s.mask_targets[j] = to_float(maskgen::align_mask(s.mask, mh, mw));
  }
  if (options.noise_targets) {
    residual::NoiseMap noise;
    if (options.filter == residual::Filter::kSrm) {
      noise = residual::srm_residual(image);
    } else {
      noise = residual::extract_residual(image,
                                         record.quality == "lq" ? options.sigma_lq : options.sigma_hq);
    }
    Image scaled = noise.residual;
    for (size_t i = 0; i < scaled.size(); ++i) scaled[i] /= 255.0;
    for (int j = 0; j < 3; ++j) {
      const int mh = h / options.strides[j], mw = w / options.strides[j];
      s.noise_targets[j] = to_float(maskgen::resize_area(scaled, mh, mw));
    }
  }
  return s;
}

std::vector<PreparedSample> prepare(const std::vector<ManifestRecord>& records,
                                    const PrepareOptions& options) {
  std::vector<PreparedSample> out(records.size());
  const int workers = options.workers > 0 ? options.workers : worker_count();
  parallel_for(records.size(), workers,
               [&](size_t i) { out[i] = prepare_sample(records[i], options); });
  return out;
}

}  // namespace telltale::data
