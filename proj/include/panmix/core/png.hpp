// Copyright 2026 The panmix Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "panmix/core/types.hpp"

namespace panmix {

// 8-bit RGB PNG encoding. Output bytes depend only on the pixels.
inline std::vector<std::uint8_t> encode_png(const ImageRGB& img) {
  detail::require(img.valid() && img.height > 0 && img.width > 0,
                  "png: invalid image dimensions");
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data.data(), 0,
                                 nullptr))
    throw FormatError(std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data.data(), 0,
                                 nullptr))
    throw FormatError(std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

inline ImageRGB decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(std::string("png decode: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  ImageRGB img(static_cast<int>(image.height), static_cast<int>(image.width));
  if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("png decode: ") + image.message);
  }
  return img;
}

// Packs 24-bit ids into RGB as R + 256 G + 65536 B.
inline ImageRGB ids_to_rgb(int height, int width, std::span<const std::uint32_t> ids) {
  ImageRGB img(height, width);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    detail::require(ids[i] < (1u << 24), "png: id exceeds 24 bits");
    auto* p = img.px(i);
    p[0] = static_cast<std::uint8_t>(ids[i] & 0xff);
    p[1] = static_cast<std::uint8_t>((ids[i] >> 8) & 0xff);
    p[2] = static_cast<std::uint8_t>((ids[i] >> 16) & 0xff);
  }
  return img;
}

inline std::vector<std::uint32_t> rgb_to_ids(const ImageRGB& img) {
  std::vector<std::uint32_t> ids(img.pixels());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto* p = img.px(i);
    ids[i] = p[0] + 256u * p[1] + 65536u * p[2];
  }
  return ids;
}

// Semantic label maps travel as RGB PNGs holding the class id in 24 bits;
// IGNORE is stored as 0xFFFF.
inline std::vector<std::uint8_t> encode_label_png(const LabelMap2D& labels) {
  std::vector<std::uint32_t> ids(labels.values.begin(), labels.values.end());
  return encode_png(ids_to_rgb(labels.height, labels.width, ids));
}

inline LabelMap2D decode_label_png(std::span<const std::uint8_t> bytes) {
  const ImageRGB img = decode_png(bytes);
  LabelMap2D out(img.height, img.width);
  const auto ids = rgb_to_ids(img);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] > kIgnore) throw FormatError("label png: value exceeds class range");
    out[i] = static_cast<ClassId>(ids[i]);
  }
  return out;
}

}  // namespace panmix
