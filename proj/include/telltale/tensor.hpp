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

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "telltale/error.hpp"

namespace telltale {

// Dense channel-major (C x H x W) array. Used for images, feature maps,
// masks (C = 1) and residuals alike.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(int channels, int height, int width, T fill = T{0})
      : channels_(channels), height_(height), width_(width) {
    if (channels < 0 || height < 0 || width < 0) {
      throw InvalidArgument("Tensor: negative dimension");
    }
    data_.assign(static_cast<size_t>(channels) * height * width, fill);
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return data_.size(); }
  size_t plane_size() const { return static_cast<size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  T& at(int c, int y, int x) {
    assert(c >= 0 && c < channels_ && y >= 0 && y < height_ && x >= 0 && x < width_);
    return data_[(static_cast<size_t>(c) * height_ + y) * width_ + x];
  }
  const T& at(int c, int y, int x) const {
    assert(c >= 0 && c < channels_ && y >= 0 && y < height_ && x >= 0 && x < width_);
    return data_[(static_cast<size_t>(c) * height_ + y) * width_ + x];
  }
  // Single-channel shorthand.
  T& at(int y, int x) { return at(0, y, x); }
  const T& at(int y, int x) const { return at(0, y, x); }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  std::span<T> plane(int c) {
    return std::span<T>(data_).subspan(static_cast<size_t>(c) * plane_size(), plane_size());
  }
  std::span<const T> plane(int c) const {
    return std::span<const T>(data_).subspan(static_cast<size_t>(c) * plane_size(),
                                             plane_size());
  }

  std::vector<T>& data() & { return data_; }
  const std::vector<T>& data() const& { return data_; }
  // By value on temporaries, so `for (v : f().data())` stays valid.
  std::vector<T> data() && { return std::move(data_); }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  template <typename U>
  bool same_shape(const Tensor<U>& other) const {
    return channels_ == other.channels() && height_ == other.height() && width_ == other.width();
  }
  bool same_spatial(int height, int width) const { return height_ == height && width_ == width; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(channels_, height_, width_);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Tensor& other) const {
    return same_shape(other) && data_ == other.data_;
  }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

}  // namespace telltale
