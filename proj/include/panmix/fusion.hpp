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
#include <numeric>
#include <vector>

#include "panmix/core/types.hpp"
#include "panmix/pseudo.hpp"

namespace panmix {

class FusionConfig {
 public:
  explicit FusionConfig(double score_floor = 0.5) : score_floor_(score_floor) {
    detail::require(score_floor >= 0.0 && score_floor <= 1.0,
                    "FusionConfig: score_floor outside [0,1]");
  }
  double score_floor() const { return score_floor_; }

 private:
  double score_floor_;
};

// Merges a semantic map with scored instances. Instances at or above the
// floor claim pixels in descending score order (ties by ascending id); a
// record that ends up with no pixels is dropped. Unclaimed pixels take the
// semantic class, except thing-class pixels, which become IGNORE.
inline PanopticLabel merge(const LabelMap2D& semantic, const InstanceSet& instances,
                           const ClassCatalog& catalog, const FusionConfig& cfg = FusionConfig{}) {
  const std::size_t n = semantic.pixels();
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < instances.records.size(); ++k) {
    const auto& r = instances.records[k];
    if (r.score < cfg.score_floor()) continue;
    detail::require(r.mask.height == semantic.height && r.mask.width == semantic.width,
                    "merge: instance mask shape differs from semantic map");
    detail::require(catalog.is_thing(r.class_id), "merge: instance of a non-thing class");
    order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = instances.records[a];
    const auto& rb = instances.records[b];
    if (ra.score != rb.score) return ra.score > rb.score;
    return ra.id < rb.id;
  });

  PanopticLabel out;
  out.semantic = LabelMap2D(semantic.height, semantic.width, kIgnore);
  out.instances.provenance = instances.provenance;
  std::vector<bool> claimed(n, false);
  for (std::size_t k : order) {
    const auto& r = instances.records[k];
    BinaryMask mine(semantic.height, semantic.width);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (r.mask.test(i) && !claimed[i]) {
        claimed[i] = true;
        mine.set(i);
        out.semantic[i] = r.class_id;
        any = true;
      }
    if (any) out.instances.records.push_back(make_record(r.id, r.class_id, r.score, std::move(mine)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (claimed[i]) continue;
    const ClassId c = semantic[i];
    out.semantic[i] = (c != kIgnore && catalog.is_stuff(c)) ? c : kIgnore;
  }
  return out;
}

inline PanopticLabel merge(const ProbVolume& semantic, const InstanceSet& instances,
                           const ClassCatalog& catalog, const FusionConfig& cfg = FusionConfig{}) {
  detail::require(static_cast<std::size_t>(semantic.channels) == catalog.size(),
                  "merge: probability channels differ from catalog size");
  return merge(semantic_argmax(semantic).labels, instances, catalog, cfg);
}

}  // namespace panmix
