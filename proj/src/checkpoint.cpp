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

#include "telltale/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "telltale/error.hpp"

namespace telltale::checkpoint {
namespace {

constexpr char kMagic[8] = {'T', 'T', 'L', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes little-endian");

template <typename U>
void put(std::ofstream& out, U value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename U>
U get(std::ifstream& in, const std::string& where) {
  U value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) throw DataError(where + ": truncated");
  return value;
}

struct Parsed {
  Metadata meta;
  nlohmann::json tensors;
  std::streamoff data_offset = 0;
};

Parsed parse_header(std::ifstream& in, const std::filesystem::path& path) {
  const std::string where = path.string();
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(where + ": not a checkpoint archive");
  }
  const auto version = get<uint32_t>(in, where);
  if (version != kFormatVersion) {
    throw DataError(where + ": unsupported archive version " + std::to_string(version));
  }
  const auto header_len = get<uint64_t>(in, where);
  if (header_len > (1u << 26)) throw DataError(where + ": header too large");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw DataError(where + ": truncated header");
  }
  Parsed p;
  try {
    const auto j = nlohmann::json::parse(text);
    p.meta.config = net::ModelConfig::from_json(j.at("model"));
    p.meta.stage = j.at("stage").get<int>();
    p.meta.epoch = j.at("epoch").get<int>();
    if (!j.at("val_auc").is_null()) p.meta.val_auc = j.at("val_auc").get<double>();
    p.meta.extra = j.value("extra", nlohmann::json::object());
    p.tensors = j.at("tensors");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": bad header: " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(where + ": bad model config: " + e.what());
  }
  p.data_offset = in.tellg();
  return p;
}

}  // namespace

void save(const std::filesystem::path& path, const nn::ParameterStore<float>& store,
          const Metadata& meta) {
  nlohmann::ordered_json header;
  header["model"] = meta.config.to_json();
  header["stage"] = meta.stage;
  header["epoch"] = meta.epoch;
  header["val_auc"] = meta.val_auc ? nlohmann::json(*meta.val_auc) : nlohmann::json(nullptr);
  header["extra"] = meta.extra;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const auto& slot : store.slots()) {
    nlohmann::ordered_json t;
    t["name"] = slot.name;
    t["shape"] = slot.shape;
    t["offset"] = slot.offset;
    tensors.push_back(t);
  }
  header["tensors"] = tensors;
  header["total"] = store.size();
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, 8);
  put<uint32_t>(out, kFormatVersion);
  put<uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(store.values().data()),
            static_cast<std::streamsize>(store.size() * sizeof(float)));
  if (!out) throw DataError("write failed: " + path.string());
}

Metadata read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_header(in, path).meta;
}

Metadata load_into(const std::filesystem::path& path, nn::ParameterStore<float>& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Parsed p = parse_header(in, path);
  const auto& slots = store.slots();
  if (!p.tensors.is_array() || p.tensors.size() != slots.size()) {
    throw DataError(path.string() + ": tensor table does not match the model");
  }
  for (size_t i = 0; i < slots.size(); ++i) {
    const auto& t = p.tensors[i];
    if (t.value("name", "") != slots[i].name ||
        t.value("shape", std::vector<int>{}) != slots[i].shape ||
        t.value("offset", size_t{0}) != slots[i].offset) {
      throw DataError(path.string() + ": tensor '" + slots[i].name + "' does not match");
    }
  }
  std::vector<float> values(store.size());
  if (!in.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(values.size() * sizeof(float)))) {
    throw DataError(path.string() + ": truncated weights");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(path.string() + ": trailing bytes after weights");
  }
  store.values() = std::move(values);
  return p.meta;
}

std::unique_ptr<net::Model<float>> load_model(const std::filesystem::path& path, Metadata* meta) {
  const Metadata m = read_metadata(path);
  auto model = std::make_unique<net::Model<float>>(m.config);
  Metadata loaded = load_into(path, model->parameters());
  if (meta) *meta = std::move(loaded);
  return model;
}

}  // namespace telltale::checkpoint
