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
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "panmix/core/rng.hpp"
#include "panmix/core/types.hpp"

namespace panmix {

enum class MaskKind { semantic, instance };

struct MixMask {
  BinaryMask bits;
  MaskKind kind = MaskKind::semantic;
};

enum class Origin : std::uint8_t { source = 0, target = 1 };

enum class MixDirection { target_to_source, source_to_target };

// One cross-domain training sample.
struct MixedSample {
  ImageRGB image;
  LabelMap2D semantic;
  std::vector<Origin> origin;
  InstanceSet instance_supervision;
  // k^t on target-origin pixels, 1 on source-origin pixels.
  std::vector<double> pixel_confidence;
  // Pixels excluded from instance supervision: remnants of instances dropped
  // by occlusion pruning.
  BinaryMask instance_void;
};

inline constexpr double kDefaultOcclusionEps = 0.01;

namespace detail {

inline void require_same_frame(int h, int w, int h2, int w2, const char* what) {
  if (h != h2 || w != w2)
    throw ValidationError(std::string("shape mismatch: ") + what);
}

inline std::size_t overlap_count(const BinaryMask& a, const BinaryMask& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) n += (a.bits[i] & b.bits[i]);
  return n;
}

}  // namespace detail

// ClassMix: picks ceil(k/2) of the k classes present in the source label
// uniformly at random; the mask covers exactly their pixels.
inline MixMask classmix_select(const LabelMap2D& source, SeededRng& rng) {
  std::vector<bool> present;
  for (ClassId v : source.values)
    if (v != kIgnore) {
      if (v >= present.size()) present.resize(v + 1u, false);
      present[v] = true;
    }
  std::vector<ClassId> classes;
  for (std::size_t c = 0; c < present.size(); ++c)
    if (present[c]) classes.push_back(static_cast<ClassId>(c));
  if (classes.empty())
    throw ValidationError("classmix_select: source label is entirely IGNORE");

  // Partial Fisher-Yates: the first `take` slots become the selection.
  const std::size_t take = (classes.size() + 1) / 2;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.below(classes.size() - i);
    std::swap(classes[i], classes[j]);
  }
  std::vector<bool> chosen(present.size(), false);
  for (std::size_t i = 0; i < take; ++i) chosen[classes[i]] = true;

  MixMask m{BinaryMask(source.height, source.width), MaskKind::semantic};
  for (std::size_t i = 0; i < source.pixels(); ++i)
    if (source[i] != kIgnore && chosen[source[i]]) m.bits.set(i);
  return m;
}

// Semantic cross-domain mixing: source pixels under the mask, target
// pixels elsewhere, for both image and label.
inline MixedSample dacs_compose(const ImageRGB& x_source, const LabelMap2D& y_source,
                                const ImageRGB& x_target, const LabelMap2D& y_target,
                                std::span<const double> k_target, const MixMask& mask) {
  const int h = x_source.height, w = x_source.width;
  detail::require_same_frame(h, w, y_source.height, y_source.width, "source label");
  detail::require_same_frame(h, w, x_target.height, x_target.width, "target image");
  detail::require_same_frame(h, w, y_target.height, y_target.width, "target label");
  detail::require_same_frame(h, w, mask.bits.height, mask.bits.width, "mix mask");
  const std::size_t n = x_source.pixels();
  if (k_target.size() != n) throw ValidationError("shape mismatch: k_target");
  for (double k : k_target)
    if (!(k >= 0.0 && k <= 1.0)) throw ValidationError("dacs_compose: k_t outside [0,1]");

  MixedSample out;
  out.image = ImageRGB(h, w);
  out.semantic = LabelMap2D(h, w);
  out.origin.resize(n);
  out.pixel_confidence.resize(n);
  out.instance_void = BinaryMask(h, w);
  out.instance_supervision.provenance = Provenance::mixed;
  for (std::size_t i = 0; i < n; ++i) {
    const bool src = mask.bits.test(i);
    const auto* px = src ? x_source.px(i) : x_target.px(i);
    std::copy_n(px, 3, out.image.px(i));
    out.semantic[i] = src ? y_source[i] : y_target[i];
    out.origin[i] = src ? Origin::source : Origin::target;
    out.pixel_confidence[i] = src ? 1.0 : k_target[i];
  }
  return out;
}

// Union of source ground truth and pasted records under fresh ids 1..n,
// source records first. Source records carry score 1.
inline InstanceSet assemble_instance_supervision(const InstanceSet& source_gt,
                                                 const InstanceSet& pasted) {
  for (std::size_t a = 0; a < source_gt.records.size(); ++a)
    for (std::size_t b = a + 1; b < source_gt.records.size(); ++b)
      if (detail::overlap_count(source_gt.records[a].mask, source_gt.records[b].mask))
        throw ValidationError("assemble_instance_supervision: ground-truth records " +
                              std::to_string(source_gt.records[a].id) + " and " +
                              std::to_string(source_gt.records[b].id) + " overlap");
  InstanceSet out;
  out.provenance = pasted.empty() ? source_gt.provenance : Provenance::mixed;
  InstanceId next = 1;
  for (const auto& r : source_gt.records) {
    out.records.push_back(r);
    out.records.back().id = next++;
    out.records.back().score = 1.0;
  }
  for (const auto& r : pasted.records) {
    out.records.push_back(r);
    out.records.back().id = next++;
  }
  return out;
}

namespace detail {

// Paints `layers` in ascending score order (ties by id); returns, per pixel,
// the index of the topmost layer or -1.
inline std::vector<int> paint_by_score(const std::vector<InstanceRecord>& layers,
                                       std::size_t n) {
  std::vector<std::size_t> order(layers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (layers[a].score != layers[b].score) return layers[a].score < layers[b].score;
    return layers[a].id < layers[b].id;
  });
  std::vector<int> owner(n, -1);
  for (std::size_t k : order)
    for (std::size_t i = 0; i < n; ++i)
      if (layers[k].mask.test(i)) owner[i] = static_cast<int>(k);
  return owner;
}

// Restricts each layer to the pixels it owns; drops layers whose visible
// fraction is below `eps` (or that vanish). Dropped remnants go to `void_mask`.
inline std::vector<InstanceRecord> visible_records(
    const std::vector<InstanceRecord>& layers, const std::vector<int>& owner,
    const BinaryMask& covered_above, double eps, BinaryMask& void_mask) {
  std::vector<InstanceRecord> kept;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& r = layers[k];
    BinaryMask vis(r.mask.height, r.mask.width);
    std::size_t total = 0, visible = 0;
    for (std::size_t i = 0; i < vis.pixels(); ++i) {
      if (!r.mask.test(i)) continue;
      ++total;
      if (owner[i] == static_cast<int>(k) && !covered_above.test(i)) {
        vis.set(i);
        ++visible;
      }
    }
    const double frac = total ? static_cast<double>(visible) / total : 0.0;
    if (visible > 0 && frac >= eps) {
      kept.push_back(make_record(r.id, r.class_id, r.score, std::move(vis)));
    } else {
      for (std::size_t i = 0; i < vis.pixels(); ++i)
        if (vis.test(i)) void_mask.set(i);
    }
  }
  return kept;
}

}  // namespace detail

// Instance-aware mixing.
//
// target_to_source: confidence-filtered target instances are pasted onto the
// source image (highest score on top). Source ground-truth instances keep
// their visible pixels and recomputed boxes; those with a visible fraction
// below `occlusion_eps` are dropped and their remnants become IGNORE. Every
// visible object keeps exactly one supervision record.
//
// source_to_target: source ground-truth instances are pasted onto the target
// image and the filtered target predictions are pruned instead. Objects the
// teacher missed stay in the image without a record, so exhaustiveness does
// not hold in this mode.
inline MixedSample imix_compose(const ImageRGB& x_target, const InstanceSet& filtered,
                                const ImageRGB& x_source, const PanopticLabel& y_source,
                                MixDirection direction,
                                double occlusion_eps = kDefaultOcclusionEps) {
  const int h = x_source.height, w = x_source.width;
  if (h <= 0 || w <= 0) throw ValidationError("imix_compose: empty image");
  detail::require_same_frame(h, w, x_target.height, x_target.width, "target image");
  detail::require_same_frame(h, w, y_source.semantic.height, y_source.semantic.width,
                             "source label");
  for (const auto& r : filtered.records)
    detail::require_same_frame(h, w, r.mask.height, r.mask.width, "filtered instance");
  for (const auto& r : y_source.instances.records)
    detail::require_same_frame(h, w, r.mask.height, r.mask.width, "source instance");
  if (direction == MixDirection::target_to_source &&
      filtered.provenance == Provenance::ground_truth && !filtered.empty())
    throw ValidationError(
        "imix_compose: target_to_source expects predicted instances, got ground truth");
  detail::require(occlusion_eps >= 0.0 && occlusion_eps <= 1.0,
                  "imix_compose: occlusion_eps outside [0,1]");

  const std::size_t n = x_source.pixels();
  MixedSample out;
  out.image = ImageRGB(h, w);
  out.semantic = LabelMap2D(h, w);
  out.origin.assign(n, Origin::source);
  out.pixel_confidence.assign(n, 1.0);
  out.instance_void = BinaryMask(h, w);

  const auto& src_records = y_source.instances.records;
  InstanceSet source_part, target_part;
  source_part.provenance = Provenance::ground_truth;
  target_part.provenance = Provenance::predicted;

  if (direction == MixDirection::target_to_source) {
    const auto owner = detail::paint_by_score(filtered.records, n);
    BinaryMask m_inst(h, w);
    for (std::size_t i = 0; i < n; ++i) m_inst.set(i, owner[i] >= 0);

    BinaryMask nothing(h, w);
    target_part.records = detail::visible_records(filtered.records, owner, nothing, 0.0,
                                                  out.instance_void);
    // Source ground truth sits below the pasted layer; each record owns its own
    // pixels since ground-truth masks are disjoint.
    std::vector<int> src_owner(n, -1);
    for (std::size_t k = 0; k < src_records.size(); ++k)
      for (std::size_t i = 0; i < n; ++i)
        if (src_records[k].mask.test(i)) src_owner[i] = static_cast<int>(k);
    source_part.records = detail::visible_records(src_records, src_owner, m_inst,
                                                  occlusion_eps, out.instance_void);

    for (std::size_t i = 0; i < n; ++i) {
      if (owner[i] >= 0) {
        const auto& r = filtered.records[static_cast<std::size_t>(owner[i])];
        std::copy_n(x_target.px(i), 3, out.image.px(i));
        out.semantic[i] = r.class_id;
        out.origin[i] = Origin::target;
        out.pixel_confidence[i] = r.score;
      } else {
        std::copy_n(x_source.px(i), 3, out.image.px(i));
        out.semantic[i] = out.instance_void.test(i) ? kIgnore : y_source.semantic[i];
      }
    }
  } else {
    BinaryMask m_src(h, w);
    for (const auto& r : src_records)
      for (std::size_t i = 0; i < n; ++i)
        if (r.mask.test(i)) m_src.set(i);
    const auto owner = detail::paint_by_score(filtered.records, n);
    target_part.records = detail::visible_records(filtered.records, owner, m_src,
                                                  occlusion_eps, out.instance_void);
    source_part.records = src_records;

    std::vector<int> kept_owner(n, -1);
    for (std::size_t k = 0; k < target_part.records.size(); ++k)
      for (std::size_t i = 0; i < n; ++i)
        if (target_part.records[k].mask.test(i)) kept_owner[i] = static_cast<int>(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (m_src.test(i)) {
        std::copy_n(x_source.px(i), 3, out.image.px(i));
        out.semantic[i] = y_source.semantic[i];
      } else {
        std::copy_n(x_target.px(i), 3, out.image.px(i));
        out.origin[i] = Origin::target;
        if (kept_owner[i] >= 0) {
          const auto& r = target_part.records[static_cast<std::size_t>(kept_owner[i])];
          out.semantic[i] = r.class_id;
          out.pixel_confidence[i] = r.score;
        } else {
          out.semantic[i] = kIgnore;
          out.pixel_confidence[i] = 0.0;
        }
      }
    }
  }

  out.instance_supervision = assemble_instance_supervision(source_part, target_part);
  if (!target_part.empty()) out.instance_supervision.provenance = Provenance::mixed;
  return out;
}

}  // namespace panmix
