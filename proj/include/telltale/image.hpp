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

#include <filesystem>
#include <string>

#include "json.hpp"
#include "telltale/tensor.hpp"

namespace telltale {

// Intensities on the 0-255 scale, RGB channel order.
using Image = Tensor<double>;

// A single-channel map (mask, probability map, ...).
using Plane = Tensor<double>;

// Throws InvalidArgument unless every pixel is finite.
void require_finite(const Image& image, const char* what);

// Reads an 8- or 16-bit PNG (any channel count) as RGB or grayscale on the
// 0-255 scale. Throws DataError on unreadable files.
Image load_png(const std::filesystem::path& path, int channels = 3);

// Writes a 1- or 3-channel image, rounding and clamping to 8 bits.
void save_png(const std::filesystem::path& path, const Image& image);

// Raw arrays: little-endian float32 payload in channel-major order at
// `path`, plus a JSON sidecar at `path` with its extension replaced by
// ".json". The sidecar always carries height, width and channels;
// `extra` fields are merged in.
void write_raw_array(const std::filesystem::path& path, const Tensor<double>& array,
                     const nlohmann::json& extra = nlohmann::json::object());
Tensor<double> read_raw_array(const std::filesystem::path& path,
                              nlohmann::json* sidecar = nullptr);

std::filesystem::path sidecar_path(const std::filesystem::path& raw_path);

}  // namespace telltale
