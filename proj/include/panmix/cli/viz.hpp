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


// Overlay rendering: class colors blended at half opacity over the image,
// 1-pixel instance outlines on top.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "panmix/core/error.hpp"
#include "panmix/core/types.hpp"

namespace panmix::cli {

using Rgb = std::array<std::uint8_t, 3>;

struct VizPalette {
  std::vector<Rgb> classes;
  Rgb boundary{255, 255, 255};

  // Golden-angle hues at fixed saturation and value, so the colors depend
  // only on the class count.
  static VizPalette for_catalog(const ClassCatalog& catalog) {
    VizPalette p;
    for (std::size_t c = 0; c < catalog.size(); ++c) {
      const double h = std::fmod(static_cast<double>(c) * 137.50776405, 360.0) / 60.0;
      const double s = c % 2 ? 0.55 : 0.8, v = c % 3 == 2 ? 0.7 : 0.95;
      const double f = h - std::floor(h);
      const double q[4] = {v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f)), v};
      double r = 0, g = 0, b = 0;
      switch (static_cast<int>(h) % 6) {
        case 0: r = q[3], g = q[2], b = q[0]; break;
        case 1: r = q[1], g = q[3], b = q[0]; break;
        case 2: r = q[0], g = q[3], b = q[2]; break;
        case 3: r = q[0], g = q[1], b = q[3]; break;
        case 4: r = q[2], g = q[0], b = q[3]; break;
        default: r = q[3], g = q[0], b = q[1]; break;
      }
      p.classes.push_back({static_cast<std::uint8_t>(std::lround(255 * r)),
                           static_cast<std::uint8_t>(std::lround(255 * g)),
                           static_cast<std::uint8_t>(std::lround(255 * b))});
    }
    return p;
  }
};

// Mask pixels with a 4-neighbour outside the mask; the frame edge counts as
// outside.
inline BinaryMask boundary_of(const BinaryMask& m) {
  BinaryMask out(m.height, m.width);
  const auto in = [&](int r, int c) {
    return r >= 0 && r < m.height && c >= 0 && c < m.width &&
           m.test(static_cast<std::size_t>(r) * m.width + c);
  };
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (in(r, c) && !(in(r - 1, c) && in(r + 1, c) && in(r, c - 1) && in(r, c + 1)))
        out.set(static_cast<std::size_t>(r) * m.width + c);
  return out;
}

inline ImageRGB visualize(const PanopticLabel& label, const ImageRGB& image,
                          const VizPalette& palette) {
  const auto& sem = label.semantic;
  if (sem.height != image.height || sem.width != image.width)
    throw ValidationError("visualize: label is " + std::to_string(sem.height) + "x" +
                          std::to_string(sem.width) + ", image is " +
                          std::to_string(image.height) + "x" + std::to_string(image.width));
  ImageRGB out = image;
  for (std::size_t i = 0; i < sem.pixels(); ++i) {
    if (sem[i] == kIgnore) continue;
    if (sem[i] >= palette.classes.size())
      throw ValidationError("visualize: class " + std::to_string(sem[i]) + " has no color");
    const auto& col = palette.classes[sem[i]];
    for (int ch = 0; ch < 3; ++ch)
      out.px(i)[ch] = static_cast<std::uint8_t>((image.px(i)[ch] + col[ch] + 1) / 2);
  }
  for (const auto& r : label.instances.records) {
    const auto b = boundary_of(r.mask);
    for (std::size_t i = 0; i < b.pixels(); ++i)
      if (b.test(i))
        for (int ch = 0; ch < 3; ++ch) out.px(i)[ch] = palette.boundary[ch];
  }
  return out;
}

}  // namespace panmix::cli
