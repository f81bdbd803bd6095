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

// JSON-lines sample manifest, one record per frame:
//   {"image_path": ..., "label": "real|df|ff|fs|nt", "mask_path": ...?,
//    "pair_path": ...?, "split": "train|val|test", "quality": "hq|lq"}
// Relative paths are resolved against the manifest's directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace telltale::data {

inline constexpr const char* kClassNames[] = {"real", "df", "ff", "fs", "nt"};
inline constexpr int kNumClasses = 5;

struct ManifestRecord {
  std::string image_path;
  std::string label = "real";
  std::optional<std::string> mask_path;
  std::optional<std::string> pair_path;
  std::string split = "train";
  std::string quality = "hq";

  bool operator==(const ManifestRecord&) const = default;
};

// Class index in {0 = real, 1 = df, 2 = ff, 3 = fs, 4 = nt}; DataError otherwise.
int class_index(const std::string& label);
// 0 for real, 1 for any manipulation.
int binary_label(const std::string& label);

// Throws DataError on malformed lines, unknown labels/splits/qualities or
// missing image paths. Paths come back resolved against the manifest's
// directory.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records,
                                         const std::string& split);

}  // namespace telltale::data
