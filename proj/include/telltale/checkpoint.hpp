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

// Versioned single-file weight archive:
//   "TTLCKPT\0" | u32 version | u64 header bytes | JSON header | float32 LE data
// The header holds the model config, training position, validation AUC and
// the tensor table (name, shape, element offset).

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>

#include "json.hpp"
#include "telltale/net.hpp"

namespace telltale::checkpoint {

inline constexpr uint32_t kFormatVersion = 1;

struct Metadata {
  net::ModelConfig config;
  int stage = 0;
  int epoch = 0;
  std::optional<double> val_auc;
  nlohmann::json extra = nlohmann::json::object();
};

void save(const std::filesystem::path& path, const nn::ParameterStore<float>& store,
          const Metadata& meta);

// Reads the header only. Throws DataError on a malformed or foreign file.
Metadata read_metadata(const std::filesystem::path& path);

// Fills `store`, whose slot table must match the archive's. Throws DataError
// on mismatch.
Metadata load_into(const std::filesystem::path& path, nn::ParameterStore<float>& store);

// Builds a model from the stored config and loads its weights.
std::unique_ptr<net::Model<float>> load_model(const std::filesystem::path& path,
                                              Metadata* meta = nullptr);

}  // namespace telltale::checkpoint
