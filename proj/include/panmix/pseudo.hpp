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

#include <utility>
#include <vector>

#include "panmix/core/types.hpp"
#include "panmix/mixing.hpp"

namespace panmix {

// Max-probability level above which a pixel counts as confident.
inline constexpr double kDefaultPseudoConfidence = 0.968;

enum class ConfidenceMode { per_image, per_pixel };

struct PseudoSemantic {
  LabelMap2D labels;
  // Fraction of pixels whose max probability reaches the threshold.
  double k = 0.0;
  // Per-pixel max probability, the per-pixel weighting variant.
  std::vector<double> pixel_max;

  // Per-pixel weights for the target branch of the mixed loss.
  std::vector<double> weights(ConfidenceMode mode = ConfidenceMode::per_image) const {
    if (mode == ConfidenceMode::per_pixel) return pixel_max;
    return std::vector<double>(pixel_max.size(), k);
  }
};

// Argmax pseudo-labels with lowest-class-id tie-breaking.
inline PseudoSemantic semantic_argmax(const ProbVolume& probs,
                                      double conf_threshold = kDefaultPseudoConfidence) {
  detail::require(probs.channels >= 1, "semantic_argmax: no channels");
  detail::require(probs.data.size() == probs.pixels() * probs.channels,
                  "semantic_argmax: malformed volume");
  PseudoSemantic out;
  out.labels = LabelMap2D(probs.height, probs.width);
  out.pixel_max.resize(probs.pixels());
  std::size_t confident = 0;
  for (std::size_t i = 0; i < probs.pixels(); ++i) {
    const double* p = probs.row(i);
    int best = 0;
    for (int c = 1; c < probs.channels; ++c)
      if (p[c] > p[best]) best = c;
    out.labels[i] = static_cast<ClassId>(best);
    out.pixel_max[i] = p[best];
    if (p[best] >= conf_threshold) ++confident;
  }
  out.k = probs.pixels() ? static_cast<double>(confident) / probs.pixels() : 0.0;
  return out;
}

// Strict comparison: tau = 1 keeps nothing since scores never exceed 1.
class FilterConfig {
 public:
  explicit FilterConfig(double tau = 0.75) : tau_(tau) {
    detail::require(tau >= 0.0 && tau <= 1.0, "FilterConfig: tau outside [0,1]");
  }
  double tau() const { return tau_; }
  bool keeps(double score) const { return score > tau_; }

 private:
  double tau_;
};

struct FilteredInstances {
  InstanceSet kept;
  MixMask joint;  // pixelwise OR of the kept masks
};

inline FilteredInstances filter_instances(const InstanceSet& pred, const FilterConfig& cfg,
                                          int height, int width) {
  FilteredInstances out;
  out.kept.provenance = pred.provenance;
  out.joint = MixMask{BinaryMask(height, width), MaskKind::instance};
  for (const auto& r : pred.records) {
    if (!cfg.keeps(r.score)) continue;
    detail::require(r.mask.height == height && r.mask.width == width,
                    "filter_instances: mask shape mismatch");
    for (std::size_t i = 0; i < r.mask.pixels(); ++i)
      if (r.mask.test(i)) out.joint.bits.set(i);
    out.kept.records.push_back(r);
  }
  return out;
}

// Frame size taken from the first record; an empty set yields a 0x0 mask.
inline FilteredInstances filter_instances(const InstanceSet& pred, const FilterConfig& cfg) {
  int h = 0, w = 0;
  if (!pred.empty()) {
    h = pred.records.front().mask.height;
    w = pred.records.front().mask.width;
  }
  return filter_instances(pred, cfg, h, w);
}

}  // namespace panmix
