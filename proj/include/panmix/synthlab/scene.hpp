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

// Synthetic street-like scenes: sky, building and road bands with small
// objects on top. Source and target share layout and classes; the target
// differs by a photometric shift.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "panmix/core/check.hpp"
#include "panmix/core/rng.hpp"
#include "panmix/core/types.hpp"

namespace panmix::synthlab {

enum class ShapeKind { disc, square, bar };

struct StuffStyle {
  std::array<double, 3> color;
  double texture = 0.0;  // per-pixel noise amplitude
};

struct ThingStyle {
  ClassId class_id = 0;
  ShapeKind shape = ShapeKind::disc;
  std::array<double, 3> color;
  int min_size = 3;
  int max_size = 6;
};

// Photometric difference between domains.
struct PhotometricShift {
  double hue_degrees = 0.0;
  double fog_alpha = 0.0;
  std::array<double, 3> fog_color{200.0, 200.0, 200.0};
  double noise_sigma = 0.0;

  bool operator==(const PhotometricShift&) const = default;
};

struct DomainSpec {
  int height = 40;
  int width = 40;
  ClassCatalog catalog;
  // stuff classes by role: top band, middle band, bottom band
  std::array<ClassId, 3> bands{0, 1, 2};
  std::vector<StuffStyle> stuff;  // indexed like `bands`
  std::vector<ThingStyle> things;
  int min_shapes = 2;
  int max_shapes = 5;
  int max_retries = 200;  // placement attempts per shape
  double color_jitter = 12.0;
  PhotometricShift shift;

  void validate() const {
    panmix::detail::require(height >= 8 && width >= 8, "DomainSpec: frame smaller than 8x8");
    panmix::detail::require(catalog.stuff_classes().size() >= 2 && catalog.thing_classes().size() >= 2,
                    "DomainSpec: need at least 2 stuff and 2 thing classes");
    panmix::detail::require(stuff.size() == 3, "DomainSpec: need one style per band");
    for (ClassId b : bands)
      panmix::detail::require(catalog.contains(b) && catalog.is_stuff(b),
                      "DomainSpec: band class must be a stuff class");
    panmix::detail::require(!things.empty(), "DomainSpec: no thing styles");
    for (const auto& t : things) {
      panmix::detail::require(catalog.contains(t.class_id) && catalog.is_thing(t.class_id),
                      "DomainSpec: thing style uses a non-thing class");
      panmix::detail::require(t.min_size >= 1 && t.max_size >= t.min_size,
                      "DomainSpec: bad thing size range");
    }
    panmix::detail::require(min_shapes >= 0 && max_shapes >= min_shapes,
                    "DomainSpec: bad shape count range");
    panmix::detail::require(max_retries >= 1, "DomainSpec: max_retries must be positive");
    panmix::detail::require(shift.fog_alpha >= 0.0 && shift.fog_alpha <= 1.0,
                    "DomainSpec: fog_alpha outside [0,1]");
    panmix::detail::require(shift.noise_sigma >= 0.0, "DomainSpec: negative noise_sigma");
  }
};

inline ClassCatalog synth_catalog() {
  return ClassCatalog({"sky", "building", "road", "ball", "crate", "pole"},
                      {false, false, false, true, true, true});
}

// Source-domain defaults; the target is the same spec with a shift applied.
inline DomainSpec default_source_spec() {
  DomainSpec s;
  s.catalog = synth_catalog();
  s.stuff = {StuffStyle{{110, 160, 230}, 6.0}, StuffStyle{{150, 135, 120}, 14.0},
             StuffStyle{{85, 85, 90}, 8.0}};
  s.things = {ThingStyle{3, ShapeKind::disc, {215, 55, 50}, 3, 5},
              ThingStyle{4, ShapeKind::square, {205, 170, 50}, 5, 9},
              ThingStyle{5, ShapeKind::bar, {60, 175, 85}, 8, 14}};
  return s;
}

namespace detail {

inline BinaryMask shape_mask(int h, int w, ShapeKind kind, int size, int cy, int cx) {
  BinaryMask m(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      bool in = false;
      switch (kind) {
        case ShapeKind::disc: {
          const double dy = r - cy, dx = c - cx;
          in = dy * dy + dx * dx <= size * size;
          break;
        }
        case ShapeKind::square:
          in = r >= cy && r < cy + size && c >= cx && c < cx + size;
          break;
        case ShapeKind::bar:
          in = r >= cy && r < cy + size && c >= cx && c < cx + std::max(2, size / 4);
          break;
      }
      if (in) m.set(static_cast<std::size_t>(r) * w + c);
    }
  return m;
}

// Bounding extent of a shape anchored at (0, 0): (rows, cols, row offset, col offset).
inline std::array<int, 4> shape_extent(ShapeKind kind, int size) {
  switch (kind) {
    case ShapeKind::disc:
      return {2 * size + 1, 2 * size + 1, size, size};
    case ShapeKind::square:
      return {size, size, 0, 0};
    case ShapeKind::bar:
      return {size, std::max(2, size / 4), 0, 0};
  }
  return {0, 0, 0, 0};
}

// Rotation about the gray axis by `degrees`.
inline std::array<double, 9> hue_matrix(double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t), k = 1.0 / std::sqrt(3.0);
  const double oc = (1.0 - c) * k * k;
  return {c + oc,         oc - s * k, oc + s * k,  //
          oc + s * k,     c + oc,     oc - s * k,  //
          oc - s * k,     oc + s * k, c + oc};
}

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace detail

// Applies the photometric shift in place; `rng` drives the additive noise.
inline void apply_shift(ImageRGB& img, const PhotometricShift& shift, SeededRng& rng) {
  if (shift == PhotometricShift{}) return;
  const auto m = detail::hue_matrix(shift.hue_degrees);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    std::uint8_t* p = img.px(i);
    const double in[3] = {double(p[0]), double(p[1]), double(p[2])};
    for (int ch = 0; ch < 3; ++ch) {
      double v = m[3 * ch] * in[0] + m[3 * ch + 1] * in[1] + m[3 * ch + 2] * in[2];
      v = (1.0 - shift.fog_alpha) * v + shift.fog_alpha * shift.fog_color[ch];
      if (shift.noise_sigma > 0.0) v += shift.noise_sigma * rng.normal();
      p[ch] = detail::quantize(v);
    }
  }
}

struct Scene {
  ImageRGB image;
  PanopticLabel label;
};

// Draws one scene. Throws ValidationError when a shape cannot be placed
// without touching another within max_retries attempts.
inline Scene generate_scene(const DomainSpec& spec, SeededRng& rng) {
  spec.validate();
  const int h = spec.height, w = spec.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  Scene out;
  out.label.semantic = LabelMap2D(h, w);
  out.label.instances.provenance = Provenance::ground_truth;
  std::vector<std::array<double, 3>> color(n);

  // bands: a stepped skyline over a flat horizon
  const int horizon = rng.range(h * 9 / 20, h * 13 / 20);
  const int base_sky = rng.range(h / 5, h * 2 / 5);
  std::vector<int> skyline(static_cast<std::size_t>(w));
  for (int c = 0; c < w;) {
    const int run = rng.range(3, 8);
    const int top = std::clamp(base_sky + rng.range(-h / 10, h / 10), 1, horizon - 1);
    for (int k = 0; k < run && c < w; ++k, ++c) skyline[static_cast<std::size_t>(c)] = top;
  }
  std::array<std::array<double, 3>, 3> band_color;
  for (int b = 0; b < 3; ++b)
    for (int ch = 0; ch < 3; ++ch)
      band_color[b][ch] = spec.stuff[b].color[ch] + spec.color_jitter * (rng.uniform() - 0.5);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const int b = r < skyline[static_cast<std::size_t>(c)] ? 0 : (r < horizon ? 1 : 2);
      out.label.semantic[i] = spec.bands[b];
      const double tex = spec.stuff[b].texture * (rng.uniform() - 0.5);
      for (int ch = 0; ch < 3; ++ch) color[i][ch] = band_color[b][ch] + tex;
    }

  // objects, kept one pixel apart so components stay separate
  std::vector<std::uint8_t> blocked(n, 0);
  const int count = rng.range(spec.min_shapes, spec.max_shapes);
  for (int k = 0; k < count; ++k) {
    const auto& style = spec.things[rng.below(spec.things.size())];
    const int size = rng.range(style.min_size, style.max_size);
    const auto ext = detail::shape_extent(style.shape, size);
    if (ext[0] > h || ext[1] > w)
      throw ValidationError("generate_scene: shape of size " + std::to_string(size) +
                            " does not fit a " + std::to_string(h) + "x" +
                            std::to_string(w) + " frame");
    BinaryMask m;
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
      const int top = rng.range(0, h - ext[0]) + ext[2];
      const int left = rng.range(0, w - ext[1]) + ext[3];
      m = detail::shape_mask(h, w, style.shape, size, top, left);
      placed = true;
      for (std::size_t i = 0; i < n && placed; ++i) placed = !(m.test(i) && blocked[i]);
    }
    if (!placed)
      throw ValidationError("generate_scene: could not place shape " + std::to_string(k + 1) +
                            " of " + std::to_string(count) + " after " +
                            std::to_string(spec.max_retries) + " attempts");
    std::array<double, 3> tint;
    for (int ch = 0; ch < 3; ++ch)
      tint[ch] = style.color[ch] + spec.color_jitter * (rng.uniform() - 0.5);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        if (!m.test(i)) continue;
        out.label.semantic[i] = style.class_id;
        const double shade = 4.0 * (rng.uniform() - 0.5);
        for (int ch = 0; ch < 3; ++ch) color[i][ch] = tint[ch] + shade;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr >= 0 && rr < h && cc >= 0 && cc < w)
              blocked[static_cast<std::size_t>(rr) * w + cc] = 1;
          }
      }
    out.label.instances.records.push_back(
        make_record(static_cast<InstanceId>(k + 1), style.class_id, 1.0, std::move(m)));
  }

  out.image = ImageRGB(h, w);
  for (std::size_t i = 0; i < n; ++i)
    for (int ch = 0; ch < 3; ++ch) out.image.px(i)[ch] = detail::quantize(color[i][ch]);
  apply_shift(out.image, spec.shift, rng);
  return out;
}

// Scene `index` of a stream: seeded independently so pools can be built in
// any order or in parallel.
inline Scene generate_scene_at(const DomainSpec& spec, std::uint64_t seed, std::uint64_t index) {
  SeededRng rng(derive_seed(seed, index));
  return generate_scene(spec, rng);
}

}  // namespace panmix::synthlab
