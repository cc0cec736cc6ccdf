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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "panmix/core/types.hpp"
#include "panmix/mixing.hpp"

// Training losses as pure functions. Each returns the scalar value together
// with the analytic gradient with respect to the pre-softmax / pre-sigmoid
// scores of its designated input, so every loss can be checked against
// finite differences without a network.

namespace panmix {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before log.
inline constexpr double kProbClamp = 1e-12;

struct LossOutput {
  double value = 0.0;
  std::vector<double> grad;
};

// Losses with a classification input and a box-regression input.
struct HeadLossOutput {
  double value = 0.0;
  double cls_term = 0.0;
  double box_term = 0.0;
  std::vector<double> grad_cls;  // wrt logits
  std::vector<double> grad_box;  // wrt predicted offsets
};

// Box offsets (x, y, w, h). The height slot is the fourth regression target.
struct BoxOffset {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
};

namespace detail {

inline double clamped_log(double p) {
  return std::log(std::clamp(p, kProbClamp, 1.0 - kProbClamp));
}

inline void softmax_row(const double* z, int n, double* out) {
  const double m = *std::max_element(z, z + n);
  double s = 0.0;
  for (int c = 0; c < n; ++c) s += (out[c] = std::exp(z[c] - m));
  for (int c = 0; c < n; ++c) out[c] /= s;
}

inline double sign(double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError(std::string(what) + ": probability outside (0,1)");
}

// Weighted categorical CE over pixels, normalized by the number of non-IGNORE
// pixels times `extra_norm`. Gradient is with respect to the logits.
inline LossOutput weighted_ce(const ProbVolume& probs, const LabelMap2D& labels,
                              std::span<const double> weights, double extra_norm,
                              bool throw_if_empty, const char* what) {
  if (!probs.same_shape(labels.height, labels.width))
    throw ValidationError(std::string(what) + ": shape mismatch");
  const int C = probs.channels;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < labels.pixels(); ++i)
    if (labels[i] != kIgnore) {
      if (labels[i] >= C) throw ValidationError(std::string(what) + ": label out of range");
      ++counted;
    }
  LossOutput out;
  out.grad.assign(probs.data.size(), 0.0);
  if (counted == 0) {
    if (throw_if_empty)
      throw ValidationError(std::string(what) + ": every pixel is IGNORE");
    return out;
  }
  const double norm = 1.0 / (static_cast<double>(counted) * extra_norm);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.pixels(); ++i) {
    const ClassId y = labels[i];
    if (y == kIgnore) continue;
    const double wgt = weights.empty() ? 1.0 : weights[i];
    const double* p = probs.row(i);
    total -= wgt * clamped_log(p[y]);
    double* g = out.grad.data() + probs.index(i, 0);
    for (int c = 0; c < C; ++c) g[c] = wgt * norm * (p[c] - (c == y ? 1.0 : 0.0));
  }
  out.value = total * norm;
  return out;
}

}  // namespace detail

// Per-pixel softmax over channels.
inline ProbVolume softmax(const LogitVolume& logits) {
  ProbVolume p(logits.height, logits.width, logits.channels);
  for (std::size_t i = 0; i < logits.pixels(); ++i)
    detail::softmax_row(logits.row(i), logits.channels, p.row(i));
  return p;
}

// Cross-entropy of predicted distributions against labels, averaged over
// non-IGNORE pixels. The gradient is softmax - onehot, i.e. with respect to the
// logits that produced `probs`.
inline LossOutput semantic_ce(const ProbVolume& probs, const LabelMap2D& labels) {
  return detail::weighted_ce(probs, labels, {}, 1.0, true, "semantic_ce");
}

inline LossOutput semantic_ce(const LogitVolume& logits, const LabelMap2D& labels) {
  return semantic_ce(softmax(logits), labels);
}

// Self-supervised semantic loss on a ClassMix sample: plain CE on
// source-origin pixels, k^t-weighted CE against the pseudo-label elsewhere.
inline LossOutput mixed_semantic_ce(const ProbVolume& probs, const MixedSample& mixed) {
  const std::size_t n = mixed.semantic.pixels();
  if (mixed.origin.size() != n || mixed.pixel_confidence.size() != n)
    throw ValidationError("mixed_semantic_ce: origin flags missing");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = mixed.origin[i] == Origin::source ? 1.0 : mixed.pixel_confidence[i];
  return detail::weighted_ce(probs, mixed.semantic, w, 1.0, true, "mixed_semantic_ce");
}

inline LossOutput mixed_semantic_ce(const LogitVolume& logits, const MixedSample& mixed) {
  return mixed_semantic_ce(softmax(logits), mixed);
}

// Pixel-text alignment loss on similarity logits: softmax over classes, then
// CE normalized by (scored pixels x C). IGNORE pixels are not scored.
inline LossOutput cda_loss(const LogitVolume& sim, const LabelMap2D& labels) {
  return detail::weighted_ce(softmax(sim), labels, {}, static_cast<double>(sim.channels),
                             false, "cda_loss");
}

// RPN loss: mean objectness BCE over anchors plus lambda times the L1 offset
// error summed over (x, y, w, h) and averaged over positive anchors.
// `objectness` holds probabilities; grad_cls is wrt the pre-sigmoid scores.
inline HeadLossOutput rpn_loss(std::span<const double> objectness,
                               std::span<const std::uint8_t> objectness_gt,
                               std::span<const BoxOffset> box_pred,
                               std::span<const BoxOffset> box_gt,
                               std::span<const std::uint8_t> positive,
                               double lambda_rpn = 1.0) {
  const std::size_t n = objectness.size();
  if (objectness_gt.size() != n || box_pred.size() != n || box_gt.size() != n ||
      positive.size() != n)
    throw ValidationError("rpn_loss: anchor lists differ in length");
  HeadLossOutput out;
  out.grad_cls.assign(n, 0.0);
  out.grad_box.assign(4 * n, 0.0);
  if (n == 0) return out;
  std::size_t npos = 0;
  for (std::size_t a = 0; a < n; ++a) {
    detail::require_open_unit(objectness[a], "rpn_loss");
    if (objectness_gt[a] > 1) throw ValidationError("rpn_loss: objectness label not 0/1");
    npos += positive[a] ? 1 : 0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_pos = 1.0 / static_cast<double>(std::max<std::size_t>(1, npos));
  for (std::size_t a = 0; a < n; ++a) {
    const double p = objectness[a];
    const double l = objectness_gt[a];
    out.cls_term -= inv_n * (l * detail::clamped_log(p) + (1 - l) * detail::clamped_log(1 - p));
    out.grad_cls[a] = inv_n * (p - l);
    if (!positive[a]) continue;
    const double d[4] = {box_pred[a].x - box_gt[a].x, box_pred[a].y - box_gt[a].y,
                         box_pred[a].w - box_gt[a].w, box_pred[a].h - box_gt[a].h};
    for (int k = 0; k < 4; ++k) {
      out.box_term += lambda_rpn * inv_pos * std::abs(d[k]);
      out.grad_box[4 * a + k] = lambda_rpn * inv_pos * detail::sign(d[k]);
    }
  }
  out.value = out.cls_term + out.box_term;
  return out;
}

// Box-head loss over a batch of RoIs. `class_probs` is n x (things + 1), the
// last column being background; `box_pred` is n x things x 4 class-specific
// offsets of which only the ground-truth class column is penalized. Values
// are averaged over RoIs.
inline HeadLossOutput refinement_loss(std::span<const double> class_probs,
                                      std::span<const int> class_gt,
                                      std::span<const BoxOffset> box_pred,
                                      std::span<const BoxOffset> box_gt, int things,
                                      double lambda_ref = 1.0) {
  detail::require(things >= 1, "refinement_loss: need at least one thing class");
  const std::size_t n = class_gt.size();
  const std::size_t k = static_cast<std::size_t>(things) + 1;
  if (class_probs.size() != n * k || box_pred.size() != n * things || box_gt.size() != n)
    throw ValidationError("refinement_loss: input sizes disagree");
  HeadLossOutput out;
  out.grad_cls.assign(n * k, 0.0);
  out.grad_box.assign(4 * n * things, 0.0);
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int u = class_gt[r];
    if (u < 0 || u > things) throw ValidationError("refinement_loss: class label out of range");
    const double* p = class_probs.data() + r * k;
    for (std::size_t c = 0; c < k; ++c)
      if (!(p[c] >= 0.0 && std::isfinite(p[c])))
        throw ValidationError("refinement_loss: invalid class probability");
    out.cls_term -= inv_n * detail::clamped_log(p[u]);
    for (std::size_t c = 0; c < k; ++c)
      out.grad_cls[r * k + c] = inv_n * (p[c] - (static_cast<int>(c) == u ? 1.0 : 0.0));
    if (u == things) continue;  // background RoI: no box target
    const BoxOffset& v = box_gt[r];
    const BoxOffset& vh = box_pred[r * things + static_cast<std::size_t>(u)];
    const double d[4] = {vh.x - v.x, vh.y - v.y, vh.w - v.w, vh.h - v.h};
    for (int j = 0; j < 4; ++j) {
      out.box_term += lambda_ref * inv_n * std::abs(d[j]);
      out.grad_box[4 * (r * things + static_cast<std::size_t>(u)) + j] =
          lambda_ref * inv_n * detail::sign(d[j]);
    }
  }
  out.value = out.cls_term + out.box_term;
  return out;
}

// Per-pixel BCE between the ground-truth class channel of class-specific mask
// predictions (things x h x w probabilities) and a binary mask, averaged over
// the h x w grid. Gradient is wrt the pre-sigmoid scores.
inline LossOutput mask_bce(std::span<const double> mask_pred, int things,
                           const BinaryMask& mask_gt, int class_gt) {
  const std::size_t area = mask_gt.pixels();
  if (things < 1 || mask_pred.size() != area * static_cast<std::size_t>(things))
    throw ValidationError("mask_bce: prediction size disagrees with mask");
  if (class_gt < 0 || class_gt >= things)
    throw ValidationError("mask_bce: class label out of range");
  for (double p : mask_pred) detail::require_open_unit(p, "mask_bce");
  LossOutput out;
  out.grad.assign(mask_pred.size(), 0.0);
  if (area == 0) return out;
  const double inv = 1.0 / static_cast<double>(area);
  const std::size_t base = static_cast<std::size_t>(class_gt) * area;
  for (std::size_t i = 0; i < area; ++i) {
    const double p = mask_pred[base + i];
    const double m = mask_gt.test(i) ? 1.0 : 0.0;
    out.value -= inv * (m * detail::clamped_log(p) + (1 - m) * detail::clamped_log(1 - p));
    out.grad[base + i] = inv * (p - m);
  }
  return out;
}

// Mean L2 distance between two feature maps over the thing-mask pixels.
// Gradient is wrt `model`. An empty mask yields 0.
inline LossOutput feature_distance(const FeatureMap& anchor, const FeatureMap& model,
                                   const BinaryMask& thing_mask) {
  if (anchor.height != model.height || anchor.width != model.width ||
      anchor.channels != model.channels ||
      !model.same_shape(thing_mask.height, thing_mask.width))
    throw ValidationError("feature_distance: shape mismatch");
  LossOutput out;
  out.grad.assign(model.data.size(), 0.0);
  const std::size_t count = thing_mask.count();
  if (count == 0) return out;
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < model.pixels(); ++i) {
    if (!thing_mask.test(i)) continue;
    double sq = 0.0;
    for (int c = 0; c < model.channels; ++c) {
      const double d = model.at(i, c) - anchor.at(i, c);
      sq += d * d;
    }
    const double norm = std::sqrt(sq);
    out.value += inv * norm;
    if (norm == 0.0) continue;
    for (int c = 0; c < model.channels; ++c)
      out.grad[model.index(i, c)] = inv * (model.at(i, c) - anchor.at(i, c)) / norm;
  }
  return out;
}

// Weighted sum of losses that share a differentiated input.
struct WeightedLoss {
  const LossOutput* loss = nullptr;
  double weight = 1.0;
};

inline LossOutput combine_losses(std::span<const WeightedLoss> terms) {
  LossOutput out;
  for (const auto& t : terms) {
    out.value += t.weight * t.loss->value;
    if (t.loss->grad.empty()) continue;
    if (out.grad.empty()) out.grad.assign(t.loss->grad.size(), 0.0);
    if (out.grad.size() != t.loss->grad.size())
      throw ValidationError("combine_losses: gradient shapes differ");
    for (std::size_t i = 0; i < out.grad.size(); ++i)
      out.grad[i] += t.weight * t.loss->grad[i];
  }
  return out;
}

// Instance loss: RPN plus refinement (box head and mask head).
inline double instance_loss(double rpn, double refinement_box_head, double refinement_mask) {
  return rpn + refinement_box_head + refinement_mask;
}

struct LossWeights {
  double cda = 1.0;  // CLIP alignment weight inside the semantic terms
  double fd = 0.0;   // feature-distance regularizer, off by default
};

// Scalar components of the panoptic objective. The `source_*` terms make up
// the supervised loss on source images; the `mixed_*` terms the
// self-supervised loss on the ClassMix sample (semantic) and the IMix sample
// (instance).
struct PanopticLossParts {
  double source_semantic = 0.0;
  double source_cda = 0.0;
  double source_instance = 0.0;
  double source_fd = 0.0;
  double mixed_semantic = 0.0;
  double mixed_cda = 0.0;
  double mixed_instance = 0.0;
};

inline double source_panoptic_loss(const PanopticLossParts& p, const LossWeights& w = {}) {
  return p.source_semantic + w.cda * p.source_cda + p.source_instance + w.fd * p.source_fd;
}

inline double self_supervised_panoptic_loss(const PanopticLossParts& p,
                                            const LossWeights& w = {}) {
  return p.mixed_semantic + w.cda * p.mixed_cda + p.mixed_instance;
}

inline double total_panoptic_loss(const PanopticLossParts& p, const LossWeights& w = {}) {
  return source_panoptic_loss(p, w) + self_supervised_panoptic_loss(p, w);
}

}  // namespace panmix
