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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "panmix/core/error.hpp"

namespace panmix {

using ClassId = std::uint16_t;
using InstanceId = std::uint32_t;

// Pixels carrying this value are excluded from every loss and metric.
inline constexpr ClassId kIgnore = std::numeric_limits<ClassId>::max();

// Semantic classes and their thing/stuff split.
class ClassCatalog {
 public:
  ClassCatalog() = default;
  ClassCatalog(std::vector<std::string> names, std::vector<bool> is_thing)
      : names_(std::move(names)), is_thing_(std::move(is_thing)) {
    detail::require(names_.size() == is_thing_.size(),
                    "catalog: names and is_thing differ in length");
    detail::require(names_.size() >= 2, "catalog: need at least 2 classes");
    detail::require(names_.size() < kIgnore, "catalog: too many classes");
    std::set<std::string> seen(names_.begin(), names_.end());
    detail::require(seen.size() == names_.size(),
                    "catalog: class names must be unique");
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(ClassId c) const { return names_.at(c); }
  bool is_thing(ClassId c) const { return c < size() && is_thing_[c]; }
  bool is_stuff(ClassId c) const { return c < size() && !is_thing_[c]; }
  bool contains(ClassId c) const { return c < size(); }

  std::vector<ClassId> thing_classes() const { return filter(true); }
  std::vector<ClassId> stuff_classes() const { return filter(false); }

  // Fusion and panoptic evaluation need both kinds.
  void require_thing_and_stuff() const {
    detail::require(!thing_classes().empty() && !stuff_classes().empty(),
                    "catalog: need at least one thing and one stuff class");
  }

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<bool>& thing_flags() const { return is_thing_; }

  bool operator==(const ClassCatalog&) const = default;

  // The 16-class SYNTHIA/Cityscapes protocol, 6 of them things.
  static ClassCatalog cityscapes16() {
    return ClassCatalog(
        {"road", "sidewalk", "building", "wall", "fence", "pole",
         "traffic light", "traffic sign", "vegetation", "sky", "person",
         "rider", "car", "bus", "motorcycle", "bicycle"},
        {false, false, false, false, false, false, false, false, false, false,
         true, true, true, true, true, true});
  }

 private:
  std::vector<ClassId> filter(bool thing) const {
    std::vector<ClassId> out;
    for (std::size_t c = 0; c < size(); ++c)
      if (is_thing_[c] == thing) out.push_back(static_cast<ClassId>(c));
    return out;
  }

  std::vector<std::string> names_;
  std::vector<bool> is_thing_;
};

struct ImageRGB {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // row-major, RGB interleaved

  ImageRGB() = default;
  ImageRGB(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::uint8_t* px(std::size_t i) { return data.data() + 3 * i; }
  const std::uint8_t* px(std::size_t i) const { return data.data() + 3 * i; }
  bool valid() const { return data.size() == pixels() * 3; }

  bool operator==(const ImageRGB&) const = default;
};

struct LabelMap2D {
  int height = 0;
  int width = 0;
  std::vector<ClassId> values;

  LabelMap2D() = default;
  LabelMap2D(int h, int w, ClassId fill = kIgnore)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  ClassId& operator[](std::size_t i) { return values[i]; }
  ClassId operator[](std::size_t i) const { return values[i]; }

  bool operator==(const LabelMap2D&) const = default;
};

// Binary H x W bitmap, one byte per pixel (0 or 1).
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int h, int w)
      : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  bool test(std::size_t i) const { return bits[i] != 0; }
  void set(std::size_t i, bool v = true) { bits[i] = v ? 1 : 0; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
  }
  bool empty() const { return count() == 0; }
  bool same_shape(const BinaryMask& o) const {
    return height == o.height && width == o.width;
  }

  bool operator==(const BinaryMask&) const = default;
};

// Tight bounding rectangle, (x, y) is the top-left pixel.
struct Box {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const Box&) const = default;
};

inline Box tight_box(const BinaryMask& m) {
  int x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c)
      if (m.bits[static_cast<std::size_t>(r) * m.width + c]) {
        x0 = std::min(x0, c);
        y0 = std::min(y0, r);
        x1 = std::max(x1, c);
        y1 = std::max(y1, r);
      }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

enum class Provenance { ground_truth, predicted, mixed };

struct InstanceRecord {
  InstanceId id = 0;
  ClassId class_id = 0;
  double score = 1.0;
  BinaryMask mask;
  Box box;

  bool operator==(const InstanceRecord&) const = default;
};

// Builds a record whose box is the tight bounds of the mask.
inline InstanceRecord make_record(InstanceId id, ClassId cls, double score,
                                  BinaryMask mask) {
  InstanceRecord r{id, cls, score, std::move(mask), {}};
  r.box = tight_box(r.mask);
  return r;
}

struct InstanceSet {
  std::vector<InstanceRecord> records;
  Provenance provenance = Provenance::ground_truth;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  bool operator==(const InstanceSet&) const = default;
};

struct PanopticLabel {
  LabelMap2D semantic;
  InstanceSet instances;

  bool operator==(const PanopticLabel&) const = default;
};

// Dense H x W x C tensor, row-major with the channel index fastest.
template <class Tag>
struct Volume {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Volume() = default;
  Volume(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::size_t index(std::size_t pixel, int c) const {
    return pixel * static_cast<std::size_t>(channels) + c;
  }
  double& at(std::size_t pixel, int c) { return data[index(pixel, c)]; }
  double at(std::size_t pixel, int c) const { return data[index(pixel, c)]; }
  const double* row(std::size_t pixel) const { return data.data() + index(pixel, 0); }
  double* row(std::size_t pixel) { return data.data() + index(pixel, 0); }

  bool same_shape(int h, int w) const { return height == h && width == w; }
  bool all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](double v) { return std::isfinite(v); });
  }

  template <class Other>
  Volume<Other> as() const {
    Volume<Other> v;
    v.height = height;
    v.width = width;
    v.channels = channels;
    v.data = data;
    return v;
  }

  bool operator==(const Volume&) const = default;
};

struct RawTag;
struct ProbTag;
struct LogitTag;
struct FeatureTag;

// Untyped f32-backed volume as exchanged through PRB1 files.
using RawVolume = Volume<RawTag>;
// Per-pixel class distributions; each pixel's channels sum to one.
using ProbVolume = Volume<ProbTag>;
// Unnormalized per-pixel class scores.
using LogitVolume = Volume<LogitTag>;
// Per-pixel decoder features.
using FeatureMap = Volume<FeatureTag>;

inline bool is_normalized(const ProbVolume& p, double tol = 1e-6) {
  for (std::size_t i = 0; i < p.pixels(); ++i) {
    double s = 0.0;
    for (int c = 0; c < p.channels; ++c) {
      const double v = p.at(i, c);
      if (!(v >= 0.0)) return false;
      s += v;
    }
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

// Validates the probability invariant and retags.
inline ProbVolume to_probs(const RawVolume& raw, double tol = 1e-6) {
  ProbVolume p = raw.as<ProbTag>();
  if (!is_normalized(p, tol))
    throw ValidationError("probability volume: pixel distribution not normalized");
  return p;
}

struct ParamVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool all_finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
  }
  bool operator==(const ParamVector&) const = default;
};

// C x P x D text-prompt embeddings, class-major then prompt-major.
struct PromptEmbeddingBank {
  std::uint32_t classes = 0;
  std::uint32_t prompts = 0;
  std::uint32_t dims = 0;
  std::vector<float> data;

  float at(std::uint32_t c, std::uint32_t p, std::uint32_t d) const {
    return data[(static_cast<std::size_t>(c) * prompts + p) * dims + d];
  }
  bool operator==(const PromptEmbeddingBank&) const = default;
};

}  // namespace panmix
