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

#include "telltale/image.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "telltale/error.hpp"

namespace telltale {
namespace {

void put_le32(std::ostream& out, float value) {
  uint32_t bits = std::bit_cast<uint32_t>(value);
  unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                            static_cast<unsigned char>(bits >> 16),
                            static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

float get_le32(const unsigned char* bytes) {
  uint32_t bits = static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
                  (static_cast<uint32_t>(bytes[2]) << 16) | (static_cast<uint32_t>(bytes[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

void require_finite(const Image& image, const char* what) {
  for (double v : image.data()) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite pixel value");
  }
}

Image load_png(const std::filesystem::path& path, int channels) {
  if (channels != 1 && channels != 3) throw InvalidArgument("load_png: channels must be 1 or 3");
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw DataError("cannot read image: " + path.string());
  double scale = raw.depth() == CV_16U ? 255.0 / 65535.0 : 1.0;
  cv::Mat converted;
  int src_channels = raw.channels();
  if (channels == 3) {
    if (src_channels == 1) {
      cv::Mat planes[] = {raw, raw, raw};
      cv::merge(planes, 3, converted);
    } else if (src_channels == 4) {
      std::vector<cv::Mat> planes;
      cv::split(raw, planes);
      planes.resize(3);
      cv::merge(planes, converted);
    } else {
      converted = raw;
    }
  } else {
    if (src_channels == 1) {
      converted = raw;
    } else {
      // Luma from BGR(A).
      std::vector<cv::Mat> planes;
      cv::split(raw, planes);
      cv::Mat b, g, r;
      planes[0].convertTo(b, CV_64F);
      planes[1].convertTo(g, CV_64F);
      planes[2].convertTo(r, CV_64F);
      converted = 0.299 * r + 0.587 * g + 0.114 * b;
    }
  }
  cv::Mat as_double;
  converted.convertTo(as_double, CV_MAKETYPE(CV_64F, channels), scale);

  Image image(channels, as_double.rows, as_double.cols);
  for (int y = 0; y < as_double.rows; ++y) {
    const double* row = as_double.ptr<double>(y);
    for (int x = 0; x < as_double.cols; ++x) {
      for (int c = 0; c < channels; ++c) {
        // OpenCV stores BGR; we keep RGB.
        int src = channels == 3 ? 2 - c : c;
        image.at(c, y, x) = row[x * channels + src];
      }
    }
  }
  return image;
}

void save_png(const std::filesystem::path& path, const Image& image) {
  int channels = image.channels();
  if (channels != 1 && channels != 3) throw InvalidArgument("save_png: channels must be 1 or 3");
  cv::Mat out(image.height(), image.width(), CV_MAKETYPE(CV_8U, channels));
  for (int y = 0; y < image.height(); ++y) {
    unsigned char* row = out.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        int dst = channels == 3 ? 2 - c : c;
        double v = std::round(image.at(c, y, x));
        row[x * channels + dst] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Fixed compression settings so identical images produce identical bytes.
  std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(path.string(), out, params)) {
    throw DataError("cannot write image: " + path.string());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& raw_path) {
  std::filesystem::path p = raw_path;
  p.replace_extension(".json");
  return p;
}

void write_raw_array(const std::filesystem::path& path, const Tensor<double>& array,
                     const nlohmann::json& extra) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (double v : array.data()) put_le32(out, static_cast<float>(v));
  if (!out) throw DataError("write failed: " + path.string());

  nlohmann::json meta = extra;
  meta["height"] = array.height();
  meta["width"] = array.width();
  meta["channels"] = array.channels();
  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw DataError("cannot write sidecar for " + path.string());
  side << meta.dump(2) << "\n";
}

Tensor<double> read_raw_array(const std::filesystem::path& path, nlohmann::json* sidecar) {
  std::ifstream side(sidecar_path(path));
  if (!side) throw DataError("missing sidecar for " + path.string());
  nlohmann::json meta;
  try {
    side >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed sidecar for " + path.string() + ": " + e.what());
  }
  int height = meta.value("height", -1);
  int width = meta.value("width", -1);
  int channels = meta.value("channels", -1);
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw DataError("sidecar lacks positive height/width/channels: " + path.string());
  }
  Tensor<double> array(channels, height, width);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<unsigned char> bytes(array.size() * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<size_t>(in.gcount()) != bytes.size() || in.peek() != EOF) {
    throw DataError("raw array size does not match sidecar: " + path.string());
  }
  for (size_t i = 0; i < array.size(); ++i) array[i] = get_le32(&bytes[i * 4]);
  if (sidecar) *sidecar = std::move(meta);
  return array;
}

}  // namespace telltale
