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

#include <cstdint>
#include <span>
#include <vector>

#include "panmix/core/types.hpp"

namespace panmix {

// Row-major run lengths of a binary mask. The first run counts zeros (and may
// be 0); runs then alternate between ones and zeros.
inline std::vector<std::uint32_t> rle_encode(const BinaryMask& mask) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t length = 0;
  for (std::uint8_t b : mask.bits) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != current) {
      runs.push_back(length);
      current = v;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

inline BinaryMask rle_decode(std::span<const std::uint32_t> runs, int height,
                             int width) {
  detail::require(height >= 0 && width >= 0, "rle: negative dimensions");
  BinaryMask mask(height, width);
  std::uint64_t total = 0;
  for (auto r : runs) total += r;
  if (total != mask.pixels())
    throw FormatError("rle: runs sum to " + std::to_string(total) + ", expected " +
                      std::to_string(mask.pixels()));
  std::size_t pos = 0;
  std::uint8_t v = 0;
  for (auto r : runs) {
    std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(pos), r, v);
    pos += r;
    v ^= 1;
  }
  return mask;
}

}  // namespace panmix
