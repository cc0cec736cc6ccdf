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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panmix/core/types.hpp"

// Little-endian binary containers:
//
//   CEB1  "CEB1" u32 C, u32 P, u32 D, then C*P*D f32 (class, prompt, dim)
//   PRB1  "PRB1" u32 H, u32 W, u32 C, then H*W*C f32 (row-major, channel-minor)

namespace panmix {
namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const char* what)
      : bytes_(bytes), what_(what) {}

  void expect_magic(const char (&magic)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
      throw FormatError(std::string(what_) + ": magic mismatch, expected " + magic);
    pos_ += 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void need(std::uint64_t n) const {
    if (pos_ + n > bytes_.size())
      throw FormatError(std::string(what_) + ": truncated payload");
  }
  void expect_end() const {
    if (pos_ != bytes_.size())
      throw FormatError(std::string(what_) + ": trailing bytes after payload");
  }

 private:
  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> write_embedding_bank(const PromptEmbeddingBank& bank) {
  detail::require(bank.data.size() ==
                      static_cast<std::size_t>(bank.classes) * bank.prompts * bank.dims,
                  "embedding bank: data size mismatch");
  std::vector<std::uint8_t> out{'C', 'E', 'B', '1'};
  out.reserve(16 + 4 * bank.data.size());
  detail::put_u32(out, bank.classes);
  detail::put_u32(out, bank.prompts);
  detail::put_u32(out, bank.dims);
  for (float f : bank.data) detail::put_f32(out, f);
  return out;
}

inline PromptEmbeddingBank read_embedding_bank(
    std::span<const std::uint8_t> bytes,
    std::optional<std::size_t> expected_classes = std::nullopt) {
  detail::ByteReader in(bytes, "CEB1");
  in.expect_magic("CEB1");
  PromptEmbeddingBank bank;
  bank.classes = in.u32();
  bank.prompts = in.u32();
  bank.dims = in.u32();
  if (bank.classes == 0 || bank.prompts == 0 || bank.dims == 0)
    throw FormatError("CEB1: C, P and D must be positive");
  const std::uint64_t n = std::uint64_t{bank.classes} * bank.prompts * bank.dims;
  in.need(4 * n);
  bank.data.resize(n);
  for (auto& f : bank.data) {
    f = in.f32();
    if (!std::isfinite(f)) throw FormatError("CEB1: non-finite value");
  }
  in.expect_end();
  if (expected_classes && *expected_classes != bank.classes)
    throw ValidationError("CEB1: bank has " + std::to_string(bank.classes) +
                          " classes, catalog has " + std::to_string(*expected_classes));
  return bank;
}

// Values are narrowed to f32 on write.
template <class Tag>
std::vector<std::uint8_t> write_volume(const Volume<Tag>& v) {
  detail::require(v.data.size() == v.pixels() * static_cast<std::size_t>(v.channels),
                  "PRB1: data size mismatch");
  std::vector<std::uint8_t> out{'P', 'R', 'B', '1'};
  out.reserve(16 + 4 * v.data.size());
  detail::put_u32(out, static_cast<std::uint32_t>(v.height));
  detail::put_u32(out, static_cast<std::uint32_t>(v.width));
  detail::put_u32(out, static_cast<std::uint32_t>(v.channels));
  for (double d : v.data) detail::put_f32(out, static_cast<float>(d));
  return out;
}

inline RawVolume read_volume(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "PRB1");
  in.expect_magic("PRB1");
  const std::uint32_t h = in.u32(), w = in.u32(), c = in.u32();
  if (h == 0 || w == 0 || c == 0) throw FormatError("PRB1: zero dimension");
  if (h > (1u << 15) || w > (1u << 15) || c > (1u << 16))
    throw FormatError("PRB1: implausible dimensions");
  const std::uint64_t n = std::uint64_t{h} * w * c;
  in.need(4 * n);
  RawVolume v(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (auto& d : v.data) {
    const float f = in.f32();
    if (!std::isfinite(f)) throw FormatError("PRB1: non-finite value");
    d = f;
  }
  in.expect_end();
  return v;
}

}  // namespace panmix
